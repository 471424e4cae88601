#include "imgk/cluster.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <string>

#include <omp.h>

#include "imgk/kernels.hpp"
#include "imgk/seed.hpp"

namespace imgk {

namespace {

void check_points(const Matrix& points) {
    if (!points.allFinite()) throw ClusterError("non-finite entry in clustering input");
}

double uniform01(std::mt19937_64& rng) {
    // 53 random mantissa bits; avoids implementation-defined distributions.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matrix cluster_means(const Matrix& points, std::span<const int> labels, int k, std::vector<int>& sizes) {
    Matrix means = Matrix::Zero(k, points.cols());
    sizes.assign(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        means.row(c) += points.row(i);
        ++sizes[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) means.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    return means;
}

void repair_empty_clusters(std::vector<int>& labels, std::vector<double>& sq_dist, int k) {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        std::size_t far = labels.size();
        double far_d = -1.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (sizes[static_cast<std::size_t>(labels[i])] > 1 && sq_dist[i] > far_d) {
                far_d = sq_dist[i];
                far = i;
            }
        }
        assert(far < labels.size());
        --sizes[static_cast<std::size_t>(labels[far])];
        labels[far] = c;
        sizes[static_cast<std::size_t>(c)] = 1;
        sq_dist[far] = 0.0;
    }
}

double total_inertia(const Matrix& points, const Matrix& centroids, std::span<const int> labels) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        acc += kernels::squared_distance(points.row(i).data(), centroids.row(labels[static_cast<std::size_t>(i)]).data(),
                                         points.cols());
    return acc;
}

int count_nonempty(std::span<const int> labels, int& k_out) {
    int k = 0;
    for (int l : labels) {
        if (l < 0) throw ClusterError("negative cluster label");
        k = std::max(k, l + 1);
    }
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    for (int l : labels) seen[static_cast<std::size_t>(l)] = 1;
    k_out = k;
    return static_cast<int>(std::count(seen.begin(), seen.end(), 1));
}

double mean_of(std::span<const double> values) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

}  // namespace

Matrix kmeans_plus_plus(const Matrix& points, int k, std::uint64_t seed) {
    const auto n = points.rows();
    const auto d = points.cols();
    std::mt19937_64 rng(seed);
    Matrix centers(k, d);
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());

    auto take = [&](Eigen::Index idx, int slot) {
        chosen[static_cast<std::size_t>(idx)] = 1;
        centers.row(slot) = points.row(idx);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dist = kernels::squared_distance(points.row(i).data(), points.row(idx).data(), d);
            nearest[static_cast<std::size_t>(i)] = std::min(nearest[static_cast<std::size_t>(i)], dist);
        }
    };

    // Greedy variant: several D^2 draws per slot, keep the one that lowers
    // the potential most.
    const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
    std::vector<double> trial_nearest(static_cast<std::size_t>(n));

    take(static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n)), 0);
    for (int slot = 1; slot < k; ++slot) {
        double total = 0.0;
        for (double v : nearest) total += v;
        Eigen::Index pick = -1;
        if (total > 0.0) {
            double best_potential = std::numeric_limits<double>::infinity();
            for (int t = 0; t < trials; ++t) {
                const double target = uniform01(rng) * total;
                double acc = 0.0;
                Eigen::Index cand = -1;
                for (Eigen::Index i = 0; i < n; ++i) {
                    acc += nearest[static_cast<std::size_t>(i)];
                    if (nearest[static_cast<std::size_t>(i)] > 0.0) cand = i;
                    if (acc > target && cand >= 0) break;
                }
                double potential = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double dist = kernels::squared_distance(points.row(i).data(), points.row(cand).data(), d);
                    trial_nearest[static_cast<std::size_t>(i)] = std::min(nearest[static_cast<std::size_t>(i)], dist);
                    potential += trial_nearest[static_cast<std::size_t>(i)];
                }
                if (potential < best_potential) {
                    best_potential = potential;
                    pick = cand;
                }
            }
        } else {
            // Every remaining point coincides with a chosen center.
            const auto remaining = static_cast<std::uint64_t>(n - slot);
            auto r = rng() % remaining;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (chosen[static_cast<std::size_t>(i)]) continue;
                if (r-- == 0) {
                    pick = i;
                    break;
                }
            }
        }
        take(pick, slot);
    }
    return centers;
}

Clustering kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansParams& params) {
    const auto n = points.rows();
    if (k < 1) throw ClusterError("k must be at least 1");
    if (k > n) throw ClusterError("k=" + std::to_string(k) + " exceeds point count " + std::to_string(n));
    if (params.max_iters < 1 || params.tol < 0.0) throw ClusterError("invalid k-means parameters");
    check_points(points);

    Clustering out;
    out.seed = seed;
    Matrix centroids = kmeans_plus_plus(points, k, seed);
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::vector<double> sq_dist(static_cast<std::size_t>(n));
    std::vector<int> sizes;
    [[maybe_unused]] double previous = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= params.max_iters; ++it) {
        kernels::omp::assign_nearest(points, centroids, labels, sq_dist);
        repair_empty_clusters(labels, sq_dist, k);
        Matrix updated = cluster_means(points, labels, k, sizes);
        out.iterations = it;
#ifndef NDEBUG
        const double current = total_inertia(points, updated, labels);
        assert(current <= previous * (1.0 + 1e-12) + 1e-300);
        previous = current;
#endif
        const double base = centroids.norm();
        const double shift = (updated - centroids).norm();
        centroids = std::move(updated);
        if (shift <= params.tol * base || shift == 0.0) break;
    }

    out.centroids = std::move(centroids);
    out.inertia = total_inertia(points, out.centroids, labels);
    out.assignments = std::move(labels);
    return out;
}

std::vector<double> silhouette_samples(const Matrix& points, std::span<const int> assignments) {
    if (points.rows() < 3) throw ClusterError("silhouette needs at least 3 points");
    if (static_cast<Eigen::Index>(assignments.size()) != points.rows())
        throw ClusterError("assignment count does not match point count");
    int k = 0;
    if (count_nonempty(assignments, k) < 2) throw ClusterError("silhouette needs at least 2 clusters");
    check_points(points);
    std::vector<double> s(assignments.size());
    kernels::omp::silhouette_samples_direct(points, assignments, k, s);
    return s;
}

double silhouette(const Matrix& points, std::span<const int> assignments) {
    return mean_of(silhouette_samples(points, assignments));
}

SilhouetteScorer::SilhouetteScorer(const Matrix& points, SilhouetteParams params) : points_(points), params_(params) {
    if (points.rows() < 3) throw ClusterError("silhouette needs at least 3 points");
    check_points(points);
    if (static_cast<std::size_t>(points.rows()) <= params_.max_cached_points) {
        distances_.emplace();
        kernels::omp::pairwise_distances(points, *distances_);
    }
}

double SilhouetteScorer::score(std::span<const int> assignments) const {
    const auto n = static_cast<std::size_t>(points_.rows());
    if (assignments.size() != n) throw ClusterError("assignment count does not match point count");
    int k = 0;
    if (count_nonempty(assignments, k) < 2) throw ClusterError("silhouette needs at least 2 clusters");

    if (params_.sample_size == 0 || params_.sample_size >= n) {
        std::vector<double> s(n);
        if (distances_)
            kernels::omp::silhouette_samples(*distances_, assignments, k, s);
        else
            kernels::omp::silhouette_samples_direct(points_, assignments, k, s);
        return mean_of(s);
    }

    // Seeded partial Fisher-Yates draw of the scored subset.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(params_.sample_seed);
    for (std::size_t i = 0; i < params_.sample_size; ++i) {
        const auto j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(order[i], order[j]);
    }
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : assignments) ++sizes[static_cast<std::size_t>(l)];
    std::vector<double> sums(static_cast<std::size_t>(k));
    double acc = 0.0;
    for (std::size_t t = 0; t < params_.sample_size; ++t) {
        const auto i = static_cast<Eigen::Index>(order[t]);
        std::fill(sums.begin(), sums.end(), 0.0);
        for (Eigen::Index j = 0; j < points_.rows(); ++j) {
            if (j == i) continue;
            const double dist = distances_ ? (*distances_)(i, j)
                                           : std::sqrt(kernels::squared_distance(points_.row(i).data(),
                                                                                 points_.row(j).data(), points_.cols()));
            sums[static_cast<std::size_t>(assignments[static_cast<std::size_t>(j)])] += dist;
        }
        acc += kernels::silhouette_from_sums(sums.data(), sizes.data(), k, assignments[static_cast<std::size_t>(i)]);
    }
    return acc / static_cast<double>(params_.sample_size);
}

double SilhouetteScorer::score_or_zero(std::span<const int> assignments) const {
    int k = 0;
    if (count_nonempty(assignments, k) < 2) return 0.0;
    return score(assignments);
}

SilhouetteSummary avg_silhouette(const Matrix& points, int k, std::uint64_t base_seed, const RestartParams& params) {
    const SilhouetteScorer scorer(points, params.silhouette);
    return avg_silhouette(scorer, k, base_seed, params);
}

SilhouetteSummary avg_silhouette(const SilhouetteScorer& scorer, int k, std::uint64_t base_seed,
                                 const RestartParams& params) {
    const Matrix& points = scorer.points();
    if (params.runs < 1) throw ClusterError("restart count must be at least 1");
    if (k < 2 || k > points.rows() - 1)
        throw ClusterError("avg_silhouette needs 2 <= k <= n-1, got k=" + std::to_string(k));

    const KMeansClusterer fallback(params.kmeans);
    const Clusterer& clusterer = params.clusterer ? *params.clusterer : fallback;
    const int runs = params.runs;

    SilhouetteSummary summary;
    summary.k = k;
    summary.per_run_scores.assign(static_cast<std::size_t>(runs), 0.0);
    summary.seeds.resize(static_cast<std::size_t>(runs));
    for (int r = 0; r < runs; ++r)
        summary.seeds[static_cast<std::size_t>(r)] = split_seed(base_seed, static_cast<std::uint64_t>(r + 1));

    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(runs));
    auto one_run = [&](int r) {
        const auto idx = static_cast<std::size_t>(r);
        try {
            const Clustering c = clusterer.fit(points, k, summary.seeds[idx]);
            summary.per_run_scores[idx] = scorer.score_or_zero(c.assignments);
        } catch (...) {
            failures[idx] = std::current_exception();
        }
    };

    const int threads = params.threads > 0 ? params.threads : omp_get_max_threads();
    if (threads <= 1 || runs == 1) {
        // Inner kernels keep their own parallelism here.
        for (int r = 0; r < runs; ++r) one_run(r);
    } else {
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
        for (int r = 0; r < runs; ++r) one_run(r);
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    summary.mean_score = mean_of(summary.per_run_scores);
    return summary;
}

}  // namespace imgk
