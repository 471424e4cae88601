// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//   acceptance <path-to-imgk> <six_cluster-fixture-dir>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "imgk/validate.hpp"

namespace fs = std::filesystem;
using imgk::validate::CheckResult;

namespace {

int failures = 0;

void report(const std::string& criterion, bool passed, const std::string& detail) {
    std::printf("%s  %-32s %s\n", passed ? "PASS" : "FAIL", criterion.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += passed ? 0 : 1;
}

void report(const std::string& criterion, const CheckResult& r) {
    char t[32];
    std::snprintf(t, sizeof t, " [%.1fs]", r.seconds);
    report(criterion, r.passed, r.detail + t);
}

int run(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: %s <imgk> <fixture-dir>\n", argv[0]);
        return 2;
    }
    const fs::path cli = argv[1];
    const fs::path fixture = argv[2];

    imgk::validate::Options opts;
    report("k-recovery", imgk::validate::check_k_recovery(opts));
    report("silhouette oracle equivalence", imgk::validate::check_silhouette_oracle(opts));
    report("PCA oracle equivalence", imgk::validate::check_pca_oracle(opts));
    report("restart determinism", imgk::validate::check_restart_determinism(opts));
    report("stopping rule", imgk::validate::check_stopping_rule(opts));
    report("logit recovery", imgk::validate::check_logit_recovery(opts));
    report("FE-OLS correctness", imgk::validate::check_fe_ols(opts));

    const fs::path work = fs::temp_directory_path() / ("imgk-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(work);
    const int validate_rc = run(quote(cli) + " validate > " + quote(work / "validate.log") + " 2>&1");
    const int score_rc = run(quote(cli) + " score --manifests " + quote(fixture / "sets") + " --store " +
                             quote(fixture / "store") + " --config " + quote(fixture / "score_config.json") +
                             " --out " + quote(work / "run") + " > " + quote(work / "score.log") + " 2>&1");
    std::string row;
    {
        std::ifstream index(work / "run" / "index.csv");
        std::string header;
        std::getline(index, header);
        std::getline(index, row);
    }
    const bool six = row.rfind("six_cluster,6,", 0) == 0;
    std::ostringstream d;
    d << "imgk validate exit " << validate_rc << "; imgk score exit " << score_rc << ", index row '" << row << "'";
    report("end-to-end", validate_rc == 0 && score_rc == 0 && six, d.str());
    fs::remove_all(work);

    std::printf("%s\n", failures == 0 ? "ALL ACCEPTANCE CRITERIA PASS" : "ACCEPTANCE FAILURES PRESENT");
    return failures == 0 ? 0 : 1;
}
