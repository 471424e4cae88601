#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "helpers.hpp"

using imgk::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string output;
};

Result run(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("'") + IMGK_CLI_PATH + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Relative path -> contents for every regular file under root.
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth then score recovers k and is reproducible") {
    TempDir dir("cli-score");
    auto r = run("synth sets --out '" + (dir / "data").string() + "' --k 6 --dim 24 --patches 60 --scale 30 --seed 3 "
                 "--set-id demo",
                 dir / "log");
    REQUIRE(r.code == 0);
    const std::string common = "score --manifests '" + (dir / "data/sets").string() + "' --store '" +
                               (dir / "data/store").string() + "' --k-min 3 --patience 3 --runs 5 --seed 7 --out ";
    r = run(common + "'" + (dir / "run1").string() + "'", dir / "log");
    CHECK(r.code == 0);
    CHECK(slurp(dir / "run1/index.csv").find("demo,6,2,") != std::string::npos);
    CHECK(slurp(dir / "run1/STATUS") == "complete\n");
    CHECK(fs::exists(dir / "run1/traces/demo.csv"));
    CHECK(fs::exists(dir / "run1/traces/demo.json"));
    CHECK(fs::exists(dir / "run1/kvalues.jsonl"));
    CHECK(fs::exists(dir / "run1/failures.csv"));
    r = run(common + "'" + (dir / "run2").string() + "'", dir / "log");
    CHECK(r.code == 0);
    CHECK(tree(dir / "run1") == tree(dir / "run2"));

    // The echoed config alone reproduces the run.
    r = run("score --manifests '" + (dir / "data/sets").string() + "' --store '" + (dir / "data/store").string() +
                "' --config '" + (dir / "run1/config.json").string() + "' --out '" + (dir / "run3").string() + "'",
            dir / "log");
    CHECK(r.code == 0);
    CHECK(slurp(dir / "run1/kvalues.jsonl") == slurp(dir / "run3/kvalues.jsonl"));

    r = run("trace '" + (dir / "run1/traces/demo.csv").string() + "'", dir / "log");
    CHECK(r.code == 0);
    CHECK(r.output.find("<- k*") != std::string::npos);
}

TEST_CASE("exit codes") {
    TempDir dir("cli-exit");
    fs::create_directories(dir / "sets");
    {
        std::ofstream m(dir / "sets/a.json");
        m << R"({"set_id": "a", "image_ids": ["x"]})";
    }
    auto r = run("score --manifests '" + (dir / "sets").string() + "' --store '" + (dir / "nostore").string() +
                     "' --out '" + (dir / "out").string() + "'",
                 dir / "log");
    CHECK(r.code == 2);
    CHECK(r.output.find("store not found") != std::string::npos);

    fs::create_directories(dir / "store");
    r = run("score --manifests '" + (dir / "sets").string() + "' --store '" + (dir / "store").string() + "' --out '" +
                (dir / "out").string() + "'",
            dir / "log");
    CHECK(r.code == 1);
    CHECK(slurp(dir / "out/failures.csv").find("a,failed,stack") != std::string::npos);

    r = run("score --bogus", dir / "log");
    CHECK(r.code == 2);
    r = run("", dir / "log");
    CHECK(r.code == 2);
    CHECK(run("--help", dir / "log").code == 0);
}

TEST_CASE("regress renders both layouts and names schema errors") {
    TempDir dir("cli-regress");
    REQUIRE(run("synth choice --out '" + (dir / "exp1.csv").string() + "' -n 3000 --beta1 1.0 --seed 2", dir / "log")
                .code == 0);
    auto r = run("regress exp1 --data '" + (dir / "exp1.csv").string() + "' --out '" + (dir / "r1").string() + "'",
                 dir / "log");
    CHECK(r.code == 0);
    CHECK(r.output.find("(4)") != std::string::npos);
    CHECK(fs::exists(dir / "r1/coefficients.csv"));
    CHECK(fs::exists(dir / "r1/fits.json"));

    REQUIRE(run("synth panel --out '" + (dir / "exp2.csv").string() + "' --users 100 --seed 2", dir / "log").code == 0);
    r = run("regress exp2 --data '" + (dir / "exp2.csv").string() + "'", dir / "log");
    CHECK(r.code == 0);
    CHECK(r.output.find("Panel A: Purchase") != std::string::npos);
    CHECK(r.output.find("Panel B: Decision Time") != std::string::npos);

    {
        std::ofstream bad(dir / "bad.csv");
        bad << "participant_id,product_id,brand_id,set_id,purchase,decision_time_s,k,n_images\nu,p,b,s,1,2.0,100,1\n";
    }
    r = run("regress exp2 --data '" + (dir / "bad.csv").string() + "'", dir / "log");
    CHECK(r.code != 0);
    CHECK(r.output.find("price") != std::string::npos);
}

TEST_CASE("IMGK_THREADS is validated") {
    TempDir dir("cli-env");
    const std::string cmd = std::string("IMGK_THREADS=zero '") + IMGK_CLI_PATH + "' trace nothing.csv > '" +
                            (dir / "log").string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 2);
}

}
