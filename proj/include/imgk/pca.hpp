#pragma once

#include <stdexcept>
#include <vector>

#include "imgk/matrix.hpp"

namespace imgk {

/// Principal-component basis of a fitted point cloud.
///
/// `components` holds one unit-norm principal axis per row, ordered by
/// decreasing variance. Each axis is sign-normalized so that its entry of
/// largest magnitude is positive, which makes fits reproducible.
struct PcaModel {
    Vector mean;
    Matrix components;                ///< (L_eff, D)
    Vector explained_variance;        ///< eigenvalues of the sample covariance, length L_eff
    Vector explained_variance_ratio;  ///< explained_variance / total variance
    double total_variance = 0.0;
    int n_fitted = 0;

    int num_components() const { return static_cast<int>(components.rows()); }
    int dim() const { return static_cast<int>(mean.size()); }
};

class PcaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fits a PCA of `points` (n, D) via thin SVD of the centered matrix.
/// Keeps L_eff = min(L, n - 1, D) components. Throws PcaError for n < 2,
/// non-finite input, or zero total variance.
PcaModel fit_pca(const Matrix& points, int L);

/// Projects rows onto the model's components: row i -> components * (x_i - mean).
Matrix transform(const PcaModel& model, const Matrix& points);

/// Maps projected rows back to the original space.
Matrix inverse_transform(const PcaModel& model, const Matrix& scores);

/// Cumulative sum of explained_variance_ratio.
std::vector<double> variance_report(const PcaModel& model);

}  // namespace imgk
