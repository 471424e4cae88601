#pragma once

#include <span>
#include <vector>

#include "imgk/matrix.hpp"
#include "imgk/stats.hpp"

// Brute-force reference computations. They share no code with the
// production paths they check and favour obviousness over speed.

namespace imgk::oracle {

/// Silhouette by the textbook definition: for every point, direct loops over
/// the members of every cluster.
double naive_silhouette(const Matrix& points, std::span<const int> labels);

struct EigenPca {
    Vector eigenvalues;  ///< descending, all D of them
    Matrix eigenvectors; ///< (D, D), one eigenvector per row, same order
    Vector ratios;       ///< eigenvalues / trace
};

/// Full eigendecomposition of the explicitly assembled sample covariance.
EigenPca covariance_pca(const Matrix& points);

/// Frobenius distance between the orthogonal projectors onto the row spaces
/// of `a` and `b` (each with orthonormal rows).
double projector_distance(const Matrix& a, const Matrix& b);

/// Least-squares dummy-variable fit: one indicator per participant (when
/// `spec.user_fe`) and per non-reference brand (when `spec.brand_fe`),
/// plus an intercept when there are no participant indicators. Returns
/// the coefficients on (k/1000, price/1000, n_images) followed by the brand
/// indicators, matching fit_fe_ols's ordering of those terms.
Vector lsdv_coefficients(std::span<const stats::PanelRow> rows, stats::PanelOutcome outcome, stats::FeSpec spec);

}  // namespace imgk::oracle
