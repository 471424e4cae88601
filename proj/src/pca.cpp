#include "imgk/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

namespace imgk {

PcaModel fit_pca(const Matrix& points, int L) {
    const auto n = points.rows();
    const auto d = points.cols();
    if (L < 1) throw PcaError("requested component count must be positive");
    if (n < 2) throw PcaError("PCA needs at least 2 points, got " + std::to_string(n));
    if (d < 1) throw PcaError("PCA needs at least one column");
    if (!points.allFinite()) throw PcaError("non-finite entry in PCA input");

    PcaModel model;
    model.n_fitted = static_cast<int>(n);
    model.mean = points.colwise().mean().transpose();
    const Matrix centered = points.rowwise() - model.mean.transpose();

    const double mean_sq_norm = points.squaredNorm() / static_cast<double>(n);
    model.total_variance = centered.squaredNorm() / static_cast<double>(n - 1);
    // Identical rows leave only rounding residue after centering.
    if (!(model.total_variance > 1e-20 * std::max(mean_sq_norm, 1e-300)))
        throw PcaError("zero-variance input: all points coincide");

    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    const auto keep = static_cast<Eigen::Index>(std::min<Eigen::Index>({L, n - 1, d}));
    const Vector sigma = svd.singularValues().head(keep);

    model.components = svd.matrixV().leftCols(keep).transpose();
    for (Eigen::Index c = 0; c < keep; ++c) {
        Eigen::Index arg = 0;
        model.components.row(c).cwiseAbs().maxCoeff(&arg);
        if (model.components(c, arg) < 0) model.components.row(c) *= -1.0;
    }
    model.explained_variance = sigma.array().square() / static_cast<double>(n - 1);
    model.explained_variance_ratio = model.explained_variance / model.total_variance;
    return model;
}

Matrix transform(const PcaModel& model, const Matrix& points) {
    if (points.cols() != model.dim())
        throw PcaError("dimension mismatch: model has D=" + std::to_string(model.dim()) + ", input has " +
                       std::to_string(points.cols()));
    if (points.rows() == 0) return Matrix(0, model.num_components());
    return (points.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Matrix inverse_transform(const PcaModel& model, const Matrix& scores) {
    if (scores.cols() != model.num_components()) throw PcaError("score width does not match component count");
    Matrix out = scores * model.components;
    out.rowwise() += model.mean.transpose();
    return out;
}

std::vector<double> variance_report(const PcaModel& model) {
    std::vector<double> curve(static_cast<std::size_t>(model.explained_variance_ratio.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        acc += model.explained_variance_ratio(static_cast<Eigen::Index>(i));
        curve[i] = acc;
    }
    return curve;
}

}  // namespace imgk
