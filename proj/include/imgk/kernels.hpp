#pragma once

#include <span>

#include "imgk/matrix.hpp"

// Data-parallel inner loops of the clustering stage. Each kernel has a
// serial reference and an OpenMP version; both visit every output element
// with the same arithmetic in the same order, so their results are
// bitwise identical for any thread count.

namespace imgk::kernels {

namespace serial {

/// out(i, j) = Euclidean distance between rows i and j.
void pairwise_distances(const Matrix& points, Matrix& out);

/// labels[i] = nearest centroid (lowest index on ties), sq_dist[i] = its squared distance.
void assign_nearest(const Matrix& points, const Matrix& centroids, std::span<int> labels, std::span<double> sq_dist);

/// Per-point silhouette s(i) from a precomputed distance matrix.
void silhouette_samples(const Matrix& distances, std::span<const int> labels, int k, std::span<double> out);

/// Per-point silhouette computing distances on the fly, O(n) memory.
void silhouette_samples_direct(const Matrix& points, std::span<const int> labels, int k, std::span<double> out);

}  // namespace serial

namespace omp {

void pairwise_distances(const Matrix& points, Matrix& out);
void assign_nearest(const Matrix& points, const Matrix& centroids, std::span<int> labels, std::span<double> sq_dist);
void silhouette_samples(const Matrix& distances, std::span<const int> labels, int k, std::span<double> out);
void silhouette_samples_direct(const Matrix& points, std::span<const int> labels, int k, std::span<double> out);

}  // namespace omp

/// s(i) from per-cluster distance sums. Singletons and a = b = 0 give 0.
double silhouette_from_sums(const double* cluster_sums, const int* cluster_sizes, int k, int own);

inline double squared_distance(const double* a, const double* b, Eigen::Index d) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double t = a[j] - b[j];
        acc += t * t;
    }
    return acc;
}

}  // namespace imgk::kernels
