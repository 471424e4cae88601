#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "imgk/matrix.hpp"

namespace imgk {

class ClusterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Clustering {
    std::vector<int> assignments;  ///< length n, values in [0, k)
    Matrix centroids;              ///< (k, dim), the mean of each cluster's members
    double inertia = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;

    int k() const { return static_cast<int>(centroids.rows()); }
};

struct KMeansParams {
    int max_iters = 300;
    /// Stop once ||C_new - C_old||_F <= tol * ||C_old||_F.
    double tol = 1e-6;
};

/// Lloyd's algorithm from a k-means++ start drawn with `seed`.
///
/// Clusters that empty out during an iteration take over the point lying
/// farthest from its current centroid, so every returned cluster is
/// non-empty. The result is a pure function of the arguments.
Clustering kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansParams& params = {});

/// Greedy k-means++ seeding (2 + ln k candidate draws per center, the one
/// lowering the potential most is kept). Returns k distinct starting rows.
Matrix kmeans_plus_plus(const Matrix& points, int k, std::uint64_t seed);

/// Pluggable clustering back end for the restart loop.
class Clusterer {
public:
    virtual ~Clusterer() = default;
    virtual Clustering fit(const Matrix& points, int k, std::uint64_t seed) const = 0;
};

class KMeansClusterer final : public Clusterer {
public:
    explicit KMeansClusterer(KMeansParams params = {}) : params_(params) {}
    Clustering fit(const Matrix& points, int k, std::uint64_t seed) const override {
        return kmeans(points, k, seed, params_);
    }

private:
    KMeansParams params_;
};

/// Mean silhouette over all points, Euclidean metric.
/// Requires n >= 3 and at least two non-empty clusters.
double silhouette(const Matrix& points, std::span<const int> assignments);

/// Per-point silhouette values in row order.
std::vector<double> silhouette_samples(const Matrix& points, std::span<const int> assignments);

struct SilhouetteParams {
    /// 0 scores every point. Otherwise the mean is estimated from this many
    /// points drawn without replacement using `sample_seed`.
    std::size_t sample_size = 0;
    std::uint64_t sample_seed = 0;
    /// Above this many points the distance matrix is not cached.
    std::size_t max_cached_points = 4096;
};

/// Scores many labelings of one fixed point set, caching pairwise
/// distances when the set is small enough.
class SilhouetteScorer {
public:
    explicit SilhouetteScorer(const Matrix& points, SilhouetteParams params = {});

    /// Throws ClusterError if fewer than two clusters are non-empty.
    double score(std::span<const int> assignments) const;

    /// As score(), but a labeling with fewer than two non-empty clusters scores 0.
    double score_or_zero(std::span<const int> assignments) const;

    const Matrix& points() const { return points_; }
    bool cached() const { return distances_.has_value(); }

private:
    const Matrix& points_;
    SilhouetteParams params_;
    std::optional<Matrix> distances_;
};

struct SilhouetteSummary {
    int k = 0;
    std::vector<double> per_run_scores;
    std::vector<std::uint64_t> seeds;
    double mean_score = 0.0;
};

struct RestartParams {
    int runs = 30;
    KMeansParams kmeans;
    SilhouetteParams silhouette;
    /// Threads used across restarts; 0 means the OpenMP default.
    int threads = 0;
    /// Defaults to k-means with `kmeans` params when null.
    const Clusterer* clusterer = nullptr;
};

/// Run `params.runs` clusterings at `k`, run r (1-based) seeded with
/// split_seed(base_seed, r), and average their silhouettes.
/// Bitwise identical for every thread count.
SilhouetteSummary avg_silhouette(const Matrix& points, int k, std::uint64_t base_seed, const RestartParams& params = {});

/// Same, reusing a scorer built over `scorer.points()`.
SilhouetteSummary avg_silhouette(const SilhouetteScorer& scorer, int k, std::uint64_t base_seed,
                                 const RestartParams& params = {});

}  // namespace imgk
