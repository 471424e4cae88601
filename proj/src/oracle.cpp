#include "imgk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace imgk::oracle {

double naive_silhouette(const Matrix& points, std::span<const int> labels) {
    const auto n = points.rows();
    std::set<int> clusters(labels.begin(), labels.end());
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int own = labels[static_cast<std::size_t>(i)];
        double a = 0.0;
        int own_count = 0;
        double b = std::numeric_limits<double>::infinity();
        for (int c : clusters) {
            double sum = 0.0;
            int count = 0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (labels[static_cast<std::size_t>(j)] != c || j == i) continue;
                sum += (points.row(i) - points.row(j)).norm();
                ++count;
            }
            if (c == own) {
                a = count > 0 ? sum / count : 0.0;
                own_count = count;
            } else if (count > 0) {
                b = std::min(b, sum / count);
            }
        }
        double s = 0.0;
        if (own_count > 0 && std::isfinite(b) && std::max(a, b) > 0.0) s = (b - a) / std::max(a, b);
        total += s;
    }
    return total / static_cast<double>(n);
}

EigenPca covariance_pca(const Matrix& points) {
    const auto n = points.rows();
    const Eigen::RowVectorXd mean = points.colwise().mean();
    const Eigen::MatrixXd centered = (points.rowwise() - mean);
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const auto d = cov.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index x, Eigen::Index y) { return es.eigenvalues()(x) > es.eigenvalues()(y); });
    EigenPca out;
    out.eigenvalues.resize(d);
    out.eigenvectors.resize(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        const auto src = order[static_cast<std::size_t>(r)];
        out.eigenvalues(r) = es.eigenvalues()(src);
        out.eigenvectors.row(r) = es.eigenvectors().col(src).transpose();
    }
    out.ratios = out.eigenvalues / cov.trace();
    return out;
}

double projector_distance(const Matrix& a, const Matrix& b) {
    const Eigen::MatrixXd pa = a.transpose() * a;
    const Eigen::MatrixXd pb = b.transpose() * b;
    return (pa - pb).norm();
}

Vector lsdv_coefficients(std::span<const stats::PanelRow> rows, stats::PanelOutcome outcome, stats::FeSpec spec) {
    std::map<std::string, int> users;
    std::map<std::string, int> brands;
    for (const auto& r : rows) {
        users.emplace(r.participant_id, 0);
        brands.emplace(r.brand_id, 0);
    }
    int next = 0;
    for (auto& [_, idx] : users) idx = next++;
    next = 0;
    for (auto& [_, idx] : brands) idx = next++;

    const int n_user_cols = spec.user_fe ? static_cast<int>(users.size()) : 1;  // intercept otherwise
    const int n_brand_cols = spec.brand_fe ? static_cast<int>(brands.size()) - 1 : 0;
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 3 + n_brand_cols + n_user_cols);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        X(i, 0) = r.k / 1000.0;
        X(i, 1) = r.price / 1000.0;
        X(i, 2) = r.n_images;
        if (spec.brand_fe) {
            const int b = brands.at(r.brand_id);
            if (b > 0) X(i, 3 + b - 1) = 1.0;
        }
        const int u = spec.user_fe ? users.at(r.participant_id) : 0;
        X(i, 3 + n_brand_cols + u) = 1.0;
        y(i) = outcome == stats::PanelOutcome::purchase ? r.purchase : r.decision_time;
    }
    const Eigen::VectorXd beta = X.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
    return beta.head(3 + n_brand_cols);
}

}  // namespace imgk::oracle
