// imgk: score image sets, run the regressions, generate synthetic data,
// self-validate.
#include <omp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "imgk/csv_io.hpp"
#include "imgk/embedding_io.hpp"
#include "imgk/ksearch.hpp"
#include "imgk/pipeline.hpp"
#include "imgk/seed.hpp"
#include "imgk/stats.hpp"
#include "imgk/synth.hpp"
#include "imgk/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace imgk;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCompute = 1;
constexpr int kExitUsage = 2;

// Raised for anything the user can fix: bad paths, bad config, bad CSV.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int thread_cap() {
    const char* env = std::getenv("IMGK_THREADS");
    if (!env || !*env) return 0;
    try {
        const int v = std::stoi(env);
        if (v < 1) throw UsageError("IMGK_THREADS must be a positive integer");
        return v;
    } catch (const std::logic_error&) {
        throw UsageError(std::string("IMGK_THREADS must be a positive integer, got '") + env + "'");
    }
}

int resolve_threads(int requested) {
    const int cap = thread_cap();
    int n = requested > 0 ? requested : omp_get_max_threads();
    if (cap > 0) n = std::min(n, cap);
    return std::max(1, n);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path.string());
    out << text;
}

void make_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& ex) {
        throw UsageError("bad JSON in " + path.string() + ": " + ex.what());
    }
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
    std::string manifests;
    std::string store;
    std::string out;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> k_min, k_max, step, patience, runs, pca_components;
    int parallelism = 0;
};

// Accepts flat keys or an echoed config.json (keys under "pipeline").
void apply_config(PipelineConfig& cfg, const json& j) {
    const json& p = j.contains("pipeline") ? j.at("pipeline") : j;
    try {
        auto& s = cfg.search;
        if (p.contains("pca_components")) cfg.pca_components = p.at("pca_components").get<int>();
        if (p.contains("k_min")) s.k_min = p.at("k_min").get<int>();
        if (p.contains("k_max") && !p.at("k_max").is_null()) s.k_max = p.at("k_max").get<int>();
        if (p.contains("step")) s.step = p.at("step").get<int>();
        if (p.contains("patience")) s.patience = p.at("patience").get<int>();
        if (p.contains("base_seed")) s.base_seed = p.at("base_seed").get<std::uint64_t>();
        if (p.contains("seed")) s.base_seed = p.at("seed").get<std::uint64_t>();
        if (p.contains("runs")) s.restarts.runs = p.at("runs").get<int>();
        if (p.contains("max_iters")) s.restarts.kmeans.max_iters = p.at("max_iters").get<int>();
        if (p.contains("tol")) s.restarts.kmeans.tol = p.at("tol").get<double>();
        if (p.contains("silhouette_sample_size"))
            s.restarts.silhouette.sample_size = p.at("silhouette_sample_size").get<std::size_t>();
        if (p.contains("silhouette_sample_seed"))
            s.restarts.silhouette.sample_seed = p.at("silhouette_sample_seed").get<std::uint64_t>();
    } catch (const json::exception& ex) {
        throw UsageError(std::string("bad config value: ") + ex.what());
    }
}

std::vector<fs::path> manifest_files(const fs::path& where) {
    std::vector<fs::path> files;
    if (fs::is_regular_file(where)) {
        files.push_back(where);
    } else if (fs::is_directory(where)) {
        for (const auto& e : fs::directory_iterator(where))
            if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        throw UsageError("manifests not found: " + where.string());
    }
    if (files.empty()) throw UsageError("no manifest JSON files in " + where.string());
    return files;
}

std::string safe_file_stem(const std::string& id) {
    std::string s = id;
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
}

int cmd_score(const ScoreArgs& a) {
    const fs::path store_dir = a.store;
    if (!fs::is_directory(store_dir)) throw UsageError("store not found: " + store_dir.string());
    const auto files = manifest_files(a.manifests);

    PipelineConfig cfg;
    if (!a.config.empty()) apply_config(cfg, read_json_file(a.config));
    if (a.seed) cfg.search.base_seed = *a.seed;
    if (a.k_min) cfg.search.k_min = *a.k_min;
    if (a.k_max) cfg.search.k_max = *a.k_max;
    if (a.step) cfg.search.step = *a.step;
    if (a.patience) cfg.search.patience = *a.patience;
    if (a.runs) cfg.search.restarts.runs = *a.runs;
    if (a.pca_components) cfg.pca_components = *a.pca_components;
    try {
        cfg.search.validate();
    } catch (const std::exception& ex) {
        throw UsageError(ex.what());
    }
    if (cfg.pca_components < 1) throw UsageError("pca_components must be >= 1");

    std::vector<ImageSetManifest> manifests;
    for (const auto& f : files) {
        try {
            manifests.push_back(read_manifest(f));
        } catch (const std::exception& ex) {
            throw UsageError(ex.what());
        }
    }

    const fs::path out = a.out;
    make_out_dir(out);
    make_out_dir(out / "traces");
    // Stays "incomplete" if the run is interrupted.
    write_text(out / "STATUS", "incomplete\n");

    const int parallelism = resolve_threads(a.parallelism);
    json echo = {{"subcommand", "score"},
                 {"manifests", a.manifests},
                 {"store", a.store},
                 {"parallelism", parallelism},
                 {"pipeline", config_to_json(cfg)},
                 {"config_hash", config_hash(cfg)}};
    write_text(out / "config.json", echo.dump(2) + "\n");

    const DirectoryStore store(store_dir);
    const auto outcomes = score_corpus(manifests, store, cfg, parallelism);

    write_kvalues_jsonl(outcomes, out / "kvalues.jsonl");
    write_index_csv(outcomes, out / "index.csv");
    write_failure_ledger(outcomes, out / "failures.csv");
    int failed = 0;
    for (const auto& o : outcomes) {
        if (o.ok()) {
            dump_trace(o.value->search, out / "traces" / (safe_file_stem(o.set_id) + ".csv"));
            std::cout << o.set_id << "\tk*=" << o.value->k_star << "\t(" << o.value->n_points << " patches, "
                      << to_string(o.value->search.stop_reason) << ")\n";
        } else {
            ++failed;
            std::cerr << o.set_id << "\tFAILED at " << to_string(*o.failed_stage) << ": " << o.error << "\n";
        }
    }
    write_text(out / "STATUS", "complete\n");
    std::cout << outcomes.size() - failed << "/" << outcomes.size() << " sets scored -> " << out.string() << "\n";
    return failed == 0 ? kExitOk : kExitCompute;
}

// -------------------------------------------------------------- regress

struct RegressArgs {
    std::string mode;
    std::string data;
    std::string out;
    std::string se = "classical";
};

stats::SeType parse_se(const std::string& s) {
    if (s == "classical") return stats::SeType::classical;
    if (s == "robust") return stats::SeType::robust;
    if (s == "cluster") return stats::SeType::cluster;
    throw UsageError("unknown --se '" + s + "' (classical, robust, cluster)");
}

int cmd_regress(const RegressArgs& a) {
    const auto se = parse_se(a.se);
    if (!fs::is_regular_file(a.data)) throw UsageError("data file not found: " + a.data);

    std::vector<stats::ModelFit> fits;
    stats::ReportStyle style;
    if (a.mode == "exp1") {
        std::vector<stats::ChoiceRow> rows;
        try {
            rows = read_exp1_csv(a.data);
        } catch (const SchemaError& ex) {
            throw UsageError(std::string("schema error: ") + ex.what());
        }
        style = stats::ReportStyle::exp1;
        const std::pair<stats::KTerm, bool> specs[] = {
            {stats::KTerm::diff, false}, {stats::KTerm::diff, true}, {stats::KTerm::ratio, false}, {stats::KTerm::ratio, true}};
        for (const auto& [term, controls] : specs) {
            auto fit = stats::fit_logit(stats::build_exp1_design(rows, term, controls), {100, 1e-10, se});
            fit.label = std::string(stats::to_string(term)) + (controls ? "+controls" : "");
            fits.push_back(std::move(fit));
        }
    } else {
        std::vector<stats::PanelRow> rows;
        try {
            rows = read_exp2_csv(a.data);
        } catch (const SchemaError& ex) {
            throw UsageError(std::string("schema error: ") + ex.what());
        }
        style = stats::ReportStyle::exp2;
        const stats::FeSpec specs[] = {{false, false}, {true, false}, {true, true}};
        for (auto outcome : {stats::PanelOutcome::purchase, stats::PanelOutcome::decision_time})
            for (const auto& spec : specs) fits.push_back(stats::fit_fe_ols(rows, outcome, spec, {se}));
    }

    const auto report = stats::report_table(fits, style);
    std::cout << report.text;
    if (!a.out.empty()) {
        const fs::path out = a.out;
        make_out_dir(out);
        write_text(out / "table.txt", report.text);
        write_text(out / "coefficients.csv", report.csv);
        json arr = json::array();
        for (const auto& f : fits) arr.push_back(stats::to_json(f));
        write_text(out / "fits.json", arr.dump(2) + "\n");
        json echo = {{"subcommand", "regress"}, {"mode", a.mode}, {"data", a.data}, {"out", a.out}, {"se", a.se}};
        write_text(out / "config.json", echo.dump(2) + "\n");
    }
    return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string out;
    std::uint64_t seed = 0;
    // image sets
    int k = 6, dim = 128, n_images = 2, patches = 196, sets = 1;
    double scale = 12.0, within = 1.0;
    std::string set_prefix = "set";
    // choice data
    int n = 5000;
    double beta1 = 1.0;
    std::string term = "ratio";
    // panel
    std::string mode = "binary";
    int users = 996, per_user = 10;
};

int cmd_synth_sets(const SynthArgs& a) {
    const fs::path out = a.out;
    make_out_dir(out / "store");
    make_out_dir(out / "sets");
    for (int s = 0; s < a.sets; ++s) {
        synth::ImageSetSpec spec;
        spec.mixture.k_true = a.k;
        spec.mixture.dim = a.dim;
        spec.mixture.center_scale = a.scale;
        spec.mixture.within_std = a.within;
        spec.mixture.seed = split_seed(a.seed, static_cast<std::uint64_t>(s));
        spec.n_images = a.n_images;
        spec.patches_per_image = a.patches;
        spec.set_id = a.sets == 1 ? a.set_prefix : a.set_prefix + std::to_string(s + 1);
        const auto set = synth::gen_image_set(spec);
        for (const auto& img : set.images) write_embeddings(img, out / "store" / (img.image_id + ".kemb"));
        write_manifest(set.manifest, out / "sets" / (set.manifest.set_id + ".json"));
    }
    json echo = {{"subcommand", "synth sets"}, {"seed", a.seed},   {"k_true", a.k},
                 {"dim", a.dim},               {"n_images", a.n_images}, {"patches_per_image", a.patches},
                 {"center_scale", a.scale},    {"within_std", a.within}, {"sets", a.sets}};
    write_text(out / "config.json", echo.dump(2) + "\n");
    std::cout << a.sets << " image set(s) with " << a.k << " components -> " << out.string() << "\n";
    return kExitOk;
}

int cmd_synth_choice(const SynthArgs& a) {
    synth::ChoiceSpec spec;
    spec.n = a.n;
    spec.beta = {0.0, a.beta1};
    if (a.term == "ratio") spec.term = stats::KTerm::ratio;
    else if (a.term == "diff") spec.term = stats::KTerm::diff;
    else throw UsageError("unknown --term '" + a.term + "' (ratio, diff)");
    spec.seed = a.seed;
    write_exp1_csv(synth::gen_choice_data(spec), a.out);
    std::cout << spec.n << " choice rows -> " << a.out << "\n";
    return kExitOk;
}

int cmd_synth_panel(const SynthArgs& a) {
    synth::PanelSpec spec;
    spec.n_users = a.users;
    spec.products_per_user = a.per_user;
    spec.seed = a.seed;
    if (a.mode == "binary") {
        spec.mode = synth::PanelMode::binary;
    } else if (a.mode == "linear") {
        spec.mode = synth::PanelMode::linear;
        spec.baseline = 60.0;
        spec.noise_std = 5.0;
    } else {
        throw UsageError("unknown --mode '" + a.mode + "' (binary, linear)");
    }
    const auto rows = synth::gen_panel(spec);
    write_exp2_csv(rows, a.out);
    std::cout << rows.size() << " panel rows -> " << a.out << "\n";
    return kExitOk;
}

// ------------------------------------------------------------- validate

int cmd_validate(bool quick, std::uint64_t seed) {
    validate::Options opts;
    opts.quick = quick;
    opts.seed = seed;
    opts.log = [](const std::string& line) { std::cout << line << std::endl; };
    const auto results = validate::run_all(opts);
    int failed = 0;
    std::cout << "\nsummary\n";
    for (const auto& r : results) {
        std::printf("  %-20s %s  %6.1fs\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.seconds);
        failed += r.passed ? 0 : 1;
    }
    if (failed) {
        std::cout << failed << " check(s) failed:";
        for (const auto& r : results)
            if (!r.passed) std::cout << " " << r.name;
        std::cout << "\n";
        return kExitCompute;
    }
    std::cout << "all " << results.size() << " checks passed\n";
    return kExitOk;
}

// ---------------------------------------------------------------- trace

int cmd_trace(const std::string& path) {
    if (!fs::is_regular_file(path)) throw UsageError("trace not found: " + path);
    const auto t = load_trace(path);
    std::printf("%d points, k* = %d, stop: %s, N = %d\n", t.n_points, t.k_star, to_string(t.stop_reason),
                t.config.restarts.runs);
    std::printf("%6s  %10s  %10s  %10s  %10s\n", "k", "silh_k", "min", "max", "sd");
    for (const auto& s : t.trace) {
        double lo = 0, hi = 0, var = 0;
        if (!s.per_run_scores.empty()) {
            lo = *std::min_element(s.per_run_scores.begin(), s.per_run_scores.end());
            hi = *std::max_element(s.per_run_scores.begin(), s.per_run_scores.end());
            for (double v : s.per_run_scores) var += (v - s.mean_score) * (v - s.mean_score);
            var /= static_cast<double>(s.per_run_scores.size());
        }
        std::printf("%6d  %10.6f  %10.6f  %10.6f  %10.6f%s\n", s.k, s.mean_score, lo, hi, std::sqrt(var),
                    s.k == t.k_star ? "  <- k*" : "");
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"imgk: information richness of product image sets"};
    app.require_subcommand(1);

    ScoreArgs score;
    auto* sc = app.add_subcommand("score", "Compute k* for every image-set manifest");
    sc->add_option("--manifests", score.manifests, "Manifest JSON file or directory of them")->required();
    sc->add_option("--store", score.store, "Directory of <image_id>.kemb files")->required();
    sc->add_option("--out", score.out, "Output directory")->required();
    sc->add_option("--config", score.config, "JSON with search settings (flat keys or an echoed config.json)");
    sc->add_option("--seed", score.seed, "Base seed");
    sc->add_option("--k-min", score.k_min, "Smallest k on the grid (default 2)");
    sc->add_option("--k-max", score.k_max, "Largest k on the grid (default min(n-1, 1000))");
    sc->add_option("--step", score.step, "Grid step (default 3)");
    sc->add_option("--patience", score.patience, "Evaluations without improvement before stopping (default 100)");
    sc->add_option("--runs", score.runs, "k-means restarts per k (default 30)");
    sc->add_option("--pca-components", score.pca_components, "Principal components kept (default 100)");
    sc->add_option("--parallelism", score.parallelism, "Sets scored concurrently (default: all cores)");

    RegressArgs reg;
    auto* rc = app.add_subcommand("regress", "Fit and tabulate the experiment regressions");
    rc->add_option("mode", reg.mode, "exp1 (choice logit) or exp2 (fixed-effects OLS)")
        ->required()
        ->check(CLI::IsMember({"exp1", "exp2"}));
    rc->add_option("--data", reg.data, "Input CSV")->required();
    rc->add_option("--out", reg.out, "Directory for table.txt, coefficients.csv, fits.json");
    rc->add_option("--se", reg.se, "classical, robust or cluster (by participant)");

    SynthArgs syn;
    auto* yc = app.add_subcommand("synth", "Generate synthetic inputs");
    yc->require_subcommand(1);
    auto* ys = yc->add_subcommand("sets", "Gaussian-mixture pseudo image sets as KEMB files plus manifests");
    ys->add_option("--out", syn.out, "Output directory (gets store/ and sets/)")->required();
    ys->add_option("--seed", syn.seed, "Seed");
    ys->add_option("--k", syn.k, "Mixture components");
    ys->add_option("--dim", syn.dim, "Embedding width");
    ys->add_option("--images", syn.n_images, "Images per set");
    ys->add_option("--patches", syn.patches, "Patches per image");
    ys->add_option("--scale", syn.scale, "Radius of the center ball");
    ys->add_option("--within-std", syn.within, "Within-component standard deviation");
    ys->add_option("--sets", syn.sets, "Number of sets");
    ys->add_option("--set-id", syn.set_prefix, "Set id (prefix when --sets > 1)");
    auto* ych = yc->add_subcommand("choice", "Pairwise-choice data in the exp1 CSV layout");
    ych->add_option("--out", syn.out, "Output CSV")->required();
    ych->add_option("--seed", syn.seed, "Seed");
    ych->add_option("-n", syn.n, "Rows");
    ych->add_option("--beta1", syn.beta1, "True k-term coefficient");
    ych->add_option("--term", syn.term, "ratio or diff");
    auto* yp = yc->add_subcommand("panel", "Participant x product panel in the exp2 CSV layout");
    yp->add_option("--out", syn.out, "Output CSV")->required();
    yp->add_option("--seed", syn.seed, "Seed");
    yp->add_option("--mode", syn.mode, "binary (purchase) or linear (decision time)");
    yp->add_option("--users", syn.users, "Participants");
    yp->add_option("--per-user", syn.per_user, "Products per participant");

    bool quick = false;
    std::uint64_t vseed = validate::Options{}.seed;
    auto* vc = app.add_subcommand("validate", "Run the synthetic self-check suite");
    vc->add_flag("--quick", quick, "Fewer replications, same pass ratios");
    vc->add_option("--seed", vseed, "Master seed");

    std::string trace_path;
    auto* tc = app.add_subcommand("trace", "Pretty-print a k-search trace CSV");
    tc->add_option("csv", trace_path, "Trace CSV written by score")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const int cap = thread_cap();
        if (cap > 0) omp_set_num_threads(cap);
        if (*sc) return cmd_score(score);
        if (*rc) return cmd_regress(reg);
        if (*ys) return cmd_synth_sets(syn);
        if (*ych) return cmd_synth_choice(syn);
        if (*yp) return cmd_synth_panel(syn);
        if (*vc) return cmd_validate(quick, vseed);
        if (*tc) return cmd_trace(trace_path);
    } catch (const UsageError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitCompute;
    }
    return kExitUsage;
}
