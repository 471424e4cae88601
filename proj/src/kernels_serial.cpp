#include "imgk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace imgk::kernels {

double silhouette_from_sums(const double* cluster_sums, const int* cluster_sizes, int k, int own) {
    if (cluster_sizes[own] <= 1) return 0.0;
    const double a = cluster_sums[own] / static_cast<double>(cluster_sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
        if (c == own || cluster_sizes[c] == 0) continue;
        b = std::min(b, cluster_sums[c] / static_cast<double>(cluster_sizes[c]));
    }
    const double denom = std::max(a, b);
    if (!(denom > 0.0) || std::isinf(b)) return 0.0;
    return (b - a) / denom;
}

namespace serial {

void pairwise_distances(const Matrix& points, Matrix& out) {
    const auto n = points.rows();
    const auto d = points.cols();
    out.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i, i) = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            out(i, j) = std::sqrt(squared_distance(points.row(i).data(), points.row(j).data(), d));
        }
    }
}

void assign_nearest(const Matrix& points, const Matrix& centroids, std::span<int> labels, std::span<double> sq_dist) {
    const auto d = points.cols();
    const auto k = centroids.rows();
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < k; ++c) {
            const double dist = squared_distance(points.row(i).data(), centroids.row(c).data(), d);
            if (dist < best_d) {
                best_d = dist;
                best = static_cast<int>(c);
            }
        }
        labels[static_cast<std::size_t>(i)] = best;
        sq_dist[static_cast<std::size_t>(i)] = best_d;
    }
}

void silhouette_samples(const Matrix& distances, std::span<const int> labels, int k, std::span<double> out) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    std::vector<double> sums(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        const double* row = distances.row(i).data();
        for (Eigen::Index j = 0; j < n; ++j) sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += row[j];
        out[static_cast<std::size_t>(i)] =
            silhouette_from_sums(sums.data(), sizes.data(), k, labels[static_cast<std::size_t>(i)]);
    }
}

void silhouette_samples_direct(const Matrix& points, std::span<const int> labels, int k, std::span<double> out) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    const auto d = points.cols();
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    std::vector<double> sums(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] +=
                std::sqrt(squared_distance(points.row(i).data(), points.row(j).data(), d));
        }
        out[static_cast<std::size_t>(i)] =
            silhouette_from_sums(sums.data(), sizes.data(), k, labels[static_cast<std::size_t>(i)]);
    }
}

}  // namespace serial
}  // namespace imgk::kernels
