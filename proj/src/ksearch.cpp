#include "imgk/ksearch.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imgk/seed.hpp"

namespace imgk {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw std::runtime_error("bad number in trace: '" + s + "'");
    return v;
}

std::filesystem::path sidecar_of(const std::filesystem::path& csv_path) {
    auto p = csv_path;
    p.replace_extension(".json");
    return p;
}

}  // namespace

void SearchConfig::validate() const {
    if (k_min < 2) throw SearchError("k_min must be at least 2");
    if (k_max && *k_max < k_min) throw SearchError("k_max is below k_min");
    if (step < 1) throw SearchError("step must be at least 1");
    if (patience < 1) throw SearchError("patience must be at least 1");
    if (restarts.runs < 1) throw SearchError("restart count N must be at least 1");
}

const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::patience_exhausted: return "patience_exhausted";
        case StopReason::k_max_reached: return "k_max_reached";
        case StopReason::grid_exhausted: return "grid_exhausted";
    }
    return "unknown";
}

StopReason stop_reason_from_string(const std::string& s) {
    for (auto r : {StopReason::patience_exhausted, StopReason::k_max_reached, StopReason::grid_exhausted})
        if (s == to_string(r)) return r;
    throw std::runtime_error("unknown stop reason '" + s + "'");
}

const SilhouetteSummary& KStarResult::best() const {
    for (const auto& t : trace)
        if (t.k == k_star) return t;
    throw std::logic_error("k_star missing from trace");
}

std::uint64_t seed_for_k(std::uint64_t base_seed, int k) {
    return split_seed(base_seed, static_cast<std::uint64_t>(k));
}

KStarResult find_k_star(int n_points, const SearchConfig& config, const KEvaluator& evaluate) {
    config.validate();
    if (n_points < 3) throw SearchError("k search needs at least 3 points");
    const int feasible_max = n_points - 1;
    if (config.k_min > feasible_max) throw SearchError("empty feasible grid: k_min exceeds n-1");

    // Which bound closes the grid decides how an exhausted grid is reported.
    const int user_max = config.k_max.value_or(kDefaultKMaxBackstop);
    const int upper = std::min(user_max, feasible_max);
    const StopReason on_exhaustion = (!config.k_max && kDefaultKMaxBackstop < feasible_max)
                                         ? StopReason::k_max_reached
                                         : StopReason::grid_exhausted;

    KStarResult result;
    result.config = config;
    result.n_points = n_points;
    result.stop_reason = on_exhaustion;

    double best = -std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int k = config.k_min; k <= upper; k += config.step) {
        result.trace.push_back(evaluate(k));
        const double score = result.trace.back().mean_score;
        if (score > best) {
            best = score;
            result.k_star = k;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            result.stop_reason = StopReason::patience_exhausted;
            break;
        }
    }
    return result;
}

KStarResult find_k_star(const Matrix& points, const SearchConfig& config) {
    config.validate();
    const auto n = static_cast<int>(points.rows());
    if (n < 3) throw SearchError("k search needs at least 3 points");
    const SilhouetteScorer scorer(points, config.restarts.silhouette);
    return find_k_star(n, config, [&](int k) {
        return avg_silhouette(scorer, k, seed_for_k(config.base_seed, k), config.restarts);
    });
}

void dump_trace(const KStarResult& result, const std::filesystem::path& csv_path) {
    const auto runs = result.trace.empty() ? 0 : result.trace.front().per_run_scores.size();
    {
        std::ofstream csv(csv_path, std::ios::trunc);
        if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
        csv << "k,silh_k";
        for (std::size_t r = 1; r <= runs; ++r) csv << ",run_" << r;
        csv << '\n';
        for (const auto& t : result.trace) {
            csv << t.k << ',' << format_double(t.mean_score);
            for (double s : t.per_run_scores) csv << ',' << format_double(s);
            csv << '\n';
        }
        if (!csv) throw std::runtime_error("write failed for " + csv_path.string());
    }

    const auto& c = result.config;
    nlohmann::json seeds = nlohmann::json::object();
    for (const auto& t : result.trace) seeds[std::to_string(t.k)] = t.seeds;
    nlohmann::json j = {
        {"k_star", result.k_star},
        {"stop_reason", to_string(result.stop_reason)},
        {"n_points", result.n_points},
        {"config",
         {{"k_min", c.k_min},
          {"k_max", c.k_max ? nlohmann::json(*c.k_max) : nlohmann::json(nullptr)},
          {"step", c.step},
          {"patience", c.patience},
          {"base_seed", c.base_seed},
          {"runs", c.restarts.runs},
          {"max_iters", c.restarts.kmeans.max_iters},
          {"tol", c.restarts.kmeans.tol},
          {"silhouette_sample_size", c.restarts.silhouette.sample_size},
          {"silhouette_sample_seed", c.restarts.silhouette.sample_seed}}},
        {"seeds", seeds},
    };
    std::ofstream side(sidecar_of(csv_path), std::ios::trunc);
    if (!side) throw std::runtime_error("cannot write " + sidecar_of(csv_path).string());
    side << j.dump(2) << '\n';
}

KStarResult load_trace(const std::filesystem::path& csv_path) {
    std::ifstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path.string());
    std::ifstream side(sidecar_of(csv_path));
    if (!side) throw std::runtime_error("missing sidecar " + sidecar_of(csv_path).string());
    const auto j = nlohmann::json::parse(side);

    KStarResult result;
    result.k_star = j.at("k_star").get<int>();
    result.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
    result.n_points = j.at("n_points").get<int>();
    const auto& c = j.at("config");
    result.config.k_min = c.at("k_min").get<int>();
    if (!c.at("k_max").is_null()) result.config.k_max = c.at("k_max").get<int>();
    result.config.step = c.at("step").get<int>();
    result.config.patience = c.at("patience").get<int>();
    result.config.base_seed = c.at("base_seed").get<std::uint64_t>();
    result.config.restarts.runs = c.at("runs").get<int>();
    result.config.restarts.kmeans.max_iters = c.at("max_iters").get<int>();
    result.config.restarts.kmeans.tol = c.at("tol").get<double>();
    result.config.restarts.silhouette.sample_size = c.at("silhouette_sample_size").get<std::size_t>();
    result.config.restarts.silhouette.sample_seed = c.at("silhouette_sample_seed").get<std::uint64_t>();

    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        SilhouetteSummary t;
        std::getline(ss, cell, ',');
        t.k = std::stoi(cell);
        std::getline(ss, cell, ',');
        t.mean_score = parse_double(cell);
        while (std::getline(ss, cell, ',')) t.per_run_scores.push_back(parse_double(cell));
        if (auto it = j.at("seeds").find(std::to_string(t.k)); it != j.at("seeds").end())
            t.seeds = it->get<std::vector<std::uint64_t>>();
        result.trace.push_back(std::move(t));
    }
    return result;
}

}  // namespace imgk
