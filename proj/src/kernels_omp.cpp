#include "imgk/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace imgk::kernels::omp {

// Below this many rows a parallel region costs more than it saves.
constexpr Eigen::Index kParallelMinRows = 64;

void pairwise_distances(const Matrix& points, Matrix& out) {
    const auto n = points.rows();
    const auto d = points.cols();
    out.resize(n, n);
#pragma omp parallel for schedule(dynamic, 16) if (n >= kParallelMinRows)
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i, i) = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            out(i, j) = std::sqrt(squared_distance(points.row(i).data(), points.row(j).data(), d));
        }
    }
}

void assign_nearest(const Matrix& points, const Matrix& centroids, std::span<int> labels, std::span<double> sq_dist) {
    const auto n = points.rows();
    const auto d = points.cols();
    const auto k = centroids.rows();
#pragma omp parallel for schedule(static) if (n * k >= kParallelMinRows * 16)
    for (Eigen::Index i = 0; i < n; ++i) {
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
#pragma omp parallel if (n >= kParallelMinRows)
    {
        std::vector<double> sums(static_cast<std::size_t>(k));
#pragma omp for schedule(static)
        for (Eigen::Index i = 0; i < n; ++i) {
            std::fill(sums.begin(), sums.end(), 0.0);
            const double* row = distances.row(i).data();
            for (Eigen::Index j = 0; j < n; ++j)
                sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += row[j];
            out[static_cast<std::size_t>(i)] =
                silhouette_from_sums(sums.data(), sizes.data(), k, labels[static_cast<std::size_t>(i)]);
        }
    }
}

void silhouette_samples_direct(const Matrix& points, std::span<const int> labels, int k, std::span<double> out) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    const auto d = points.cols();
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
#pragma omp parallel if (n >= kParallelMinRows)
    {
        std::vector<double> sums(static_cast<std::size_t>(k));
#pragma omp for schedule(dynamic, 8)
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
}

}  // namespace imgk::kernels::omp
