#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <set>

#include "helpers.hpp"
#include "imgk/cluster.hpp"
#include "imgk/oracle.hpp"
#include "imgk/seed.hpp"
#include "imgk/synth.hpp"

using namespace imgk;
using imgk::testing::random_matrix;

namespace {

synth::Mixture blobs(int k, int per, int dim, std::uint64_t seed, double scale = 20.0, double min_sep = 6.0) {
    synth::MixtureSpec spec;
    spec.min_separation = min_sep;
    spec.k_true = k;
    spec.points_per_component = per;
    spec.dim = dim;
    spec.center_scale = scale;
    spec.seed = seed;
    return synth::gen_mixture(spec);
}

// Adjusted-for-permutation check: same partition up to relabeling.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [it1, new1] = ab.emplace(a[i], b[i]);
        auto [it2, new2] = ba.emplace(b[i], a[i]);
        if (it1->second != b[i] || it2->second != a[i]) return false;
    }
    return true;
}

double inertia_of(const Matrix& pts, const Clustering& c) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        s += (pts.row(i) - c.centroids.row(c.assignments[static_cast<std::size_t>(i)])).squaredNorm();
    return s;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("one-dimensional silhouette example") {
    Matrix pts(4, 1);
    pts << 0.0, 0.1, 10.0, 10.1;
    const std::vector<int> labels = {0, 0, 1, 1};
    const double s = silhouette(pts, labels);
    CHECK(s == doctest::Approx(oracle::naive_silhouette(pts, labels)).epsilon(1e-14));
    // a = 0.1 everywhere; b = 10.05 for the outer points, 9.95 for the inner ones.
    CHECK(s == doctest::Approx(1.0 - (0.1 / 10.05 + 0.1 / 9.95) / 2.0).epsilon(1e-14));
}

TEST_CASE("silhouette matches the oracle with singletons and duplicates") {
    Matrix pts(7, 2);
    pts << 0, 0, 0, 0, 1, 1, 5, 5, 5, 5, 5, 6, 9, 9;
    const std::vector<int> labels = {0, 0, 0, 1, 1, 1, 2};
    CHECK(silhouette(pts, labels) == doctest::Approx(oracle::naive_silhouette(pts, labels)).epsilon(1e-14));
    const auto per = silhouette_samples(pts, labels);
    CHECK(per[6] == 0.0);
    for (double v : per) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("silhouette preconditions") {
    const Matrix pts = random_matrix(5, 2, 1);
    CHECK_THROWS_AS(silhouette(pts, std::vector<int>{0, 0, 0, 0, 0}), ClusterError);
    CHECK_THROWS_AS(silhouette(random_matrix(2, 2, 1), std::vector<int>{0, 1}), ClusterError);
    CHECK_THROWS_AS(silhouette(pts, std::vector<int>{0, 1}), ClusterError);
    const SilhouetteScorer scorer(pts);
    CHECK(scorer.score_or_zero(std::vector<int>{1, 1, 1, 1, 1}) == 0.0);
}

TEST_CASE("cached, direct and subsampled scorers") {
    const auto mix = blobs(3, 40, 4, 5, 8.0);
    const SilhouetteScorer cached(mix.points);
    SilhouetteParams p;
    p.max_cached_points = 10;
    const SilhouetteScorer direct(mix.points, p);
    CHECK(cached.cached());
    CHECK_FALSE(direct.cached());
    const double exact = oracle::naive_silhouette(mix.points, mix.labels);
    CHECK(cached.score(mix.labels) == doctest::Approx(exact).epsilon(1e-12));
    CHECK(direct.score(mix.labels) == doctest::Approx(exact).epsilon(1e-12));

    p.sample_size = 60;
    p.sample_seed = 3;
    const SilhouetteScorer sampled(mix.points, p);
    const double est = sampled.score(mix.labels);
    CHECK(est == sampled.score(mix.labels));
    CHECK(std::abs(est - exact) < 0.1);
}

TEST_CASE("k-means recovers separated blobs over many seeds") {
    const auto mix = blobs(3, 20, 2, 7, 20.0, 10.0);
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto c = kmeans(mix.points, 3, s);
        CAPTURE(s);
        CHECK(same_partition(c.assignments, mix.labels));
    }
}

TEST_CASE("k-means result is self-consistent") {
    const Matrix pts = random_matrix(200, 3, 9);
    for (int k : {2, 7, 20}) {
        const auto c = kmeans(pts, k, 42);
        REQUIRE(c.k() == k);
        std::set<int> used(c.assignments.begin(), c.assignments.end());
        CHECK(static_cast<int>(used.size()) == k);
        CHECK(c.inertia == doctest::Approx(inertia_of(pts, c)).epsilon(1e-10));
        for (int j = 0; j < k; ++j) {
            Vector mean = Vector::Zero(3);
            int count = 0;
            for (std::size_t i = 0; i < c.assignments.size(); ++i)
                if (c.assignments[i] == j) {
                    mean += pts.row(static_cast<Eigen::Index>(i)).transpose();
                    ++count;
                }
            CHECK((mean / count - c.centroids.row(j).transpose()).norm() < 1e-12);
        }
        CHECK(c.iterations <= 300);
    }
}

TEST_CASE("restarts that converge to one partition score identically") {
    const auto mix = blobs(3, 20, 2, 8, 20.0, 10.0);
    RestartParams p;
    p.runs = 30;
    const auto s = avg_silhouette(mix.points, 3, 1, p);
    for (double v : s.per_run_scores) CHECK(v == s.per_run_scores[0]);
    CHECK(s.mean_score == doctest::Approx(s.per_run_scores[0]).epsilon(1e-15));
}

TEST_CASE("k-means is a pure function of its seed") {
    const Matrix pts = random_matrix(150, 4, 10);
    const auto a = kmeans(pts, 6, 123);
    const auto b = kmeans(pts, 6, 123);
    CHECK(a.assignments == b.assignments);
    CHECK(std::memcmp(&a.inertia, &b.inertia, sizeof(double)) == 0);
}

TEST_CASE("k-means edge cases") {
    const Matrix pts = random_matrix(12, 2, 11);
    const auto one = kmeans(pts, 1, 0);
    CHECK(std::all_of(one.assignments.begin(), one.assignments.end(), [](int l) { return l == 0; }));
    CHECK((one.centroids.row(0) - pts.colwise().mean()).norm() < 1e-12);
    const auto all = kmeans(pts, 12, 0);
    CHECK(all.inertia == doctest::Approx(0.0));
    CHECK(std::set<int>(all.assignments.begin(), all.assignments.end()).size() == 12);
    CHECK_THROWS_AS(kmeans(pts, 13, 0), ClusterError);
    CHECK_THROWS_AS(kmeans(pts, 0, 0), ClusterError);

    // Duplicated points: more clusters than distinct rows must still fill every cluster.
    Matrix dup(6, 1);
    dup << 1, 1, 1, 2, 2, 3;
    const auto d = kmeans(dup, 4, 1);
    CHECK(std::set<int>(d.assignments.begin(), d.assignments.end()).size() == 4);
}

TEST_CASE("k-means++ seeds are distinct rows") {
    const Matrix pts = random_matrix(50, 3, 12);
    const Matrix seeds = kmeans_plus_plus(pts, 10, 5);
    for (Eigen::Index i = 0; i < seeds.rows(); ++i) {
        bool found = false;
        for (Eigen::Index r = 0; r < pts.rows(); ++r) found = found || seeds.row(i) == pts.row(r);
        CHECK(found);
        for (Eigen::Index j = 0; j < i; ++j) CHECK(seeds.row(i) != seeds.row(j));
    }
}

TEST_CASE("avg_silhouette uses split seeds and averages in order") {
    const auto mix = blobs(3, 20, 4, 13, 6.0);
    RestartParams p;
    p.runs = 5;
    const auto s = avg_silhouette(mix.points, 3, 99, p);
    REQUIRE(s.per_run_scores.size() == 5);
    double sum = 0.0;
    for (int r = 0; r < 5; ++r) {
        CHECK(s.seeds[static_cast<std::size_t>(r)] == split_seed(99, static_cast<std::uint64_t>(r + 1)));
        const auto c = kmeans(mix.points, 3, s.seeds[static_cast<std::size_t>(r)]);
        CHECK(s.per_run_scores[static_cast<std::size_t>(r)] == silhouette(mix.points, c.assignments));
        sum += s.per_run_scores[static_cast<std::size_t>(r)];
    }
    CHECK(s.mean_score == sum / 5.0);
}

TEST_CASE("avg_silhouette is bitwise identical across thread counts") {
    const auto mix = blobs(5, 30, 8, 14, 5.0);
    RestartParams p;
    p.runs = 30;
    std::vector<SilhouetteSummary> out;
    for (int t : {1, 2, 4, 8}) {
        p.threads = t;
        out.push_back(avg_silhouette(mix.points, 5, 2024, p));
    }
    for (const auto& s : out) {
        CHECK(std::memcmp(s.per_run_scores.data(), out[0].per_run_scores.data(), sizeof(double) * 30) == 0);
        CHECK(std::memcmp(&s.mean_score, &out[0].mean_score, sizeof(double)) == 0);
    }
}

TEST_CASE("avg_silhouette bounds on k") {
    const Matrix pts = random_matrix(10, 2, 15);
    CHECK_THROWS_AS(avg_silhouette(pts, 1, 0), ClusterError);
    CHECK_THROWS_AS(avg_silhouette(pts, 10, 0), ClusterError);
    CHECK_NOTHROW(avg_silhouette(pts, 9, 0));
}

TEST_CASE("custom clusterer is used by the restart loop") {
    struct Halves final : Clusterer {
        Clustering fit(const Matrix& points, int k, std::uint64_t seed) const override {
            Clustering c;
            c.seed = seed;
            c.assignments.resize(static_cast<std::size_t>(points.rows()));
            for (std::size_t i = 0; i < c.assignments.size(); ++i)
                c.assignments[i] = static_cast<int>(i * static_cast<std::size_t>(k) / c.assignments.size());
            c.centroids = Matrix::Zero(k, points.cols());
            return c;
        }
    } halves;
    Matrix pts(4, 1);
    pts << 0, 1, 10, 11;
    RestartParams p;
    p.runs = 3;
    p.clusterer = &halves;
    const auto s = avg_silhouette(pts, 2, 0, p);
    CHECK(s.mean_score == doctest::Approx(silhouette(pts, std::vector<int>{0, 0, 1, 1})));
}

}
