#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "imgk/ksearch.hpp"
#include "imgk/seed.hpp"
#include "imgk/synth.hpp"

using namespace imgk;
using imgk::testing::TempDir;

namespace {

// Deterministic pseudo-random curve over k with optional per-run scores.
KEvaluator noisy_curve(std::uint64_t seed, int runs = 1) {
    return [seed, runs](int k) {
        std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(k)));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        SilhouetteSummary s;
        s.k = k;
        double sum = 0.0;
        for (int r = 0; r < runs; ++r) {
            s.per_run_scores.push_back(u(rng));
            s.seeds.push_back(split_seed(seed_for_k(seed, k), static_cast<std::uint64_t>(r + 1)));
            sum += s.per_run_scores.back();
        }
        s.mean_score = sum / runs;
        return s;
    };
}

KEvaluator from_values(std::vector<double> values, int k_min, int step) {
    return [=](int k) {
        SilhouetteSummary s;
        s.k = k;
        s.mean_score = values.at(static_cast<std::size_t>((k - k_min) / step));
        s.per_run_scores = {s.mean_score};
        return s;
    };
}

}  // namespace

TEST_SUITE("ksearch") {

TEST_CASE("patience counts evaluations after the last strict improvement") {
    SearchConfig cfg;
    cfg.patience = 2;
    // grid 2, 5, 8, 11, 14, 17: ties do not reset patience
    const auto r = find_k_star(100, cfg, from_values({0.1, 0.5, 0.5, 0.4, 0.9, 1.0}, 2, 3));
    CHECK(r.trace.size() == 4);
    CHECK(r.k_star == 5);
    CHECK(r.stop_reason == StopReason::patience_exhausted);
}

TEST_CASE("peak at the third grid point costs exactly 3 + patience evaluations") {
    for (int patience : {1, 2, 5, 30}) {
        SearchConfig cfg;
        cfg.patience = patience;
        int calls = 0;
        const auto r = find_k_star(1000, cfg, [&](int k) {
            ++calls;
            SilhouetteSummary s;
            s.k = k;
            const int g = (k - 2) / 3;
            s.mean_score = g <= 2 ? g : 2.0 - 0.01 * (g - 2);
            return s;
        });
        CHECK(calls == 3 + patience);
        CHECK(r.k_star == 8);
    }
}

TEST_CASE("k* is the argmax with ties going to the smaller k") {
    SearchConfig cfg;
    cfg.patience = 10;
    const auto r = find_k_star(20, cfg, from_values({0.2, 0.7, 0.3, 0.7, 0.1, 0.0, -0.1}, 2, 3));
    CHECK(r.k_star == 5);
    CHECK(r.best().k == 5);
    CHECK(r.stop_reason == StopReason::grid_exhausted);  // grid 2..17 bounded by n - 1 = 19
}

TEST_CASE("grid bounds and stop reasons") {
    SearchConfig cfg;
    cfg.patience = 1000;
    auto r = find_k_star(12, cfg, noisy_curve(1));
    CHECK(r.trace.back().k == 11);
    CHECK(r.stop_reason == StopReason::grid_exhausted);

    cfg.k_max = 9;
    r = find_k_star(500, cfg, noisy_curve(1));
    CHECK(r.trace.back().k == 8);
    CHECK(r.stop_reason == StopReason::grid_exhausted);

    cfg.k_max.reset();
    cfg.patience = 10000;
    r = find_k_star(5000, cfg, noisy_curve(1));
    CHECK(r.trace.back().k <= kDefaultKMaxBackstop);
    CHECK(r.trace.back().k + cfg.step > kDefaultKMaxBackstop);
    CHECK(r.stop_reason == StopReason::k_max_reached);
}

TEST_CASE("traces are prefixes across patience and k_max") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        SearchConfig a;
        a.patience = 3;
        SearchConfig b = a;
        b.patience = 8;
        const auto ra = find_k_star(300, a, noisy_curve(seed));
        const auto rb = find_k_star(300, b, noisy_curve(seed));
        REQUIRE(ra.trace.size() <= rb.trace.size());
        for (std::size_t i = 0; i < ra.trace.size(); ++i) CHECK(ra.trace[i].mean_score == rb.trace[i].mean_score);
        CHECK(rb.best().mean_score >= ra.best().mean_score);
        // Evaluations after the winner never exceed patience.
        const auto after = static_cast<int>(ra.trace.size()) - 1 - (ra.k_star - a.k_min) / a.step;
        CHECK(after <= a.patience);
    }
}

TEST_CASE("per-k seeds do not depend on where the grid starts") {
    synth::MixtureSpec spec;
    spec.k_true = 3;
    spec.points_per_component = 15;
    spec.dim = 4;
    spec.center_scale = 6.0;
    spec.seed = 3;
    const auto mix = synth::gen_mixture(spec);
    SearchConfig a;
    a.k_min = 2;
    a.step = 2;
    a.patience = 3;
    a.restarts.runs = 4;
    a.base_seed = 17;
    SearchConfig b = a;
    b.k_min = 4;
    const auto ra = find_k_star(mix.points, a);
    const auto rb = find_k_star(mix.points, b);
    REQUIRE(ra.trace.size() >= 2);
    CHECK(ra.trace[1].k == rb.trace[0].k);
    CHECK(ra.trace[1].mean_score == rb.trace[0].mean_score);
    CHECK(ra.trace[1].seeds == rb.trace[0].seeds);
}

TEST_CASE("configuration errors") {
    SearchConfig cfg;
    cfg.k_min = 1;
    CHECK_THROWS_AS(find_k_star(10, cfg, noisy_curve(0)), SearchError);
    cfg = {};
    cfg.k_max = 1;
    CHECK_THROWS_AS(cfg.validate(), SearchError);
    cfg = {};
    cfg.step = 0;
    CHECK_THROWS_AS(cfg.validate(), SearchError);
    cfg = {};
    cfg.patience = 0;
    CHECK_THROWS_AS(cfg.validate(), SearchError);
    cfg = {};
    cfg.k_min = 10;
    CHECK_THROWS_WITH_AS(find_k_star(10, cfg, noisy_curve(0)), doctest::Contains("empty feasible grid"), SearchError);
}

TEST_CASE("trace dump round-trips bitwise") {
    SearchConfig cfg;
    cfg.patience = 4;
    cfg.k_max = 40;
    cfg.base_seed = 0xfeedbeefULL;
    cfg.restarts.runs = 3;
    const auto r = find_k_star(200, cfg, noisy_curve(cfg.base_seed, 3));
    TempDir dir("trace");
    dump_trace(r, dir / "t.csv");
    const auto back = load_trace(dir / "t.csv");
    CHECK(back.k_star == r.k_star);
    CHECK(back.n_points == r.n_points);
    CHECK(back.stop_reason == r.stop_reason);
    CHECK(back.config.k_max == r.config.k_max);
    CHECK(back.config.base_seed == r.config.base_seed);
    REQUIRE(back.trace.size() == r.trace.size());
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        CHECK(back.trace[i].k == r.trace[i].k);
        CHECK(std::memcmp(&back.trace[i].mean_score, &r.trace[i].mean_score, sizeof(double)) == 0);
        CHECK(back.trace[i].per_run_scores == r.trace[i].per_run_scores);
        CHECK(back.trace[i].seeds == r.trace[i].seeds);
    }
    std::ifstream in(dir / "t.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "k,silh_k,run_1,run_2,run_3");
}

TEST_CASE("stop reason names") {
    for (auto r : {StopReason::patience_exhausted, StopReason::k_max_reached, StopReason::grid_exhausted})
        CHECK(stop_reason_from_string(to_string(r)) == r);
    CHECK_THROWS(stop_reason_from_string("bogus"));
}

}
