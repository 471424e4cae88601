#include "imgk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

namespace imgk::stats {

namespace {

double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_likelihood(const Vector& eta, const Vector& y) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - log1pexp(eta(i));
    return ll;
}

// Score vector X'(y - p) accumulated in extended precision, so that the
// convergence test is not limited by summation error on large regressors.
Vector score_vector(const Matrix& X, const Vector& resid) {
    Vector g(X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        long double acc = 0.0L;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            acc += static_cast<long double>(X(i, c)) * static_cast<long double>(resid(i));
        g(c) = static_cast<double>(acc);
    }
    return g;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double t_two_sided_p(double t, int dof) {
    if (dof <= 0 || !std::isfinite(t)) return std::numeric_limits<double>::quiet_NaN();
    boost::math::students_t dist(static_cast<double>(dof));
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

void require_full_rank(const Matrix& X, std::span<const std::string> names) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (X.col(j).norm() == 0.0)
            throw RankDeficiencyError(names[static_cast<std::size_t>(j)], "column is identically zero");
    }
    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    Eigen::ColPivHouseholderQR<Matrix> full(X);
    full.setThreshold(1e-10);
    if (full.rank() == X.cols()) return;
    // Find the first column that adds nothing to the span of its predecessors.
    for (Eigen::Index j = 1; j < X.cols(); ++j) {
        const Matrix head = X.leftCols(j);
        Eigen::ColPivHouseholderQR<Matrix> qr(head);
        const Vector fit = head * qr.solve(Vector(X.col(j)));
        if ((X.col(j) - fit).norm() <= 1e-9 * std::max(X.col(j).norm(), scale))
            throw RankDeficiencyError(names[static_cast<std::size_t>(j)], "collinear with preceding columns");
    }
    throw RankDeficiencyError(names.back(), "design is not of full column rank");
}

// V = A^{-1} M A^{-1} * factor, with M built from per-observation scores,
// summed within cluster when `groups` is given.
Matrix sandwich(const Matrix& bread, const Matrix& scores, const std::vector<std::string>* groups, double factor) {
    Matrix meat = Matrix::Zero(scores.cols(), scores.cols());
    if (groups) {
        std::map<std::string, Vector> sums;
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            auto [it, inserted] = sums.try_emplace((*groups)[static_cast<std::size_t>(i)], Vector::Zero(scores.cols()));
            it->second += scores.row(i).transpose();
        }
        for (const auto& [_, s] : sums) meat += s * s.transpose();
    } else {
        meat = scores.transpose() * scores;
    }
    return factor * bread * meat * bread;
}

std::size_t count_groups(const std::vector<std::string>& groups) {
    std::vector<std::string> g = groups;
    std::sort(g.begin(), g.end());
    return static_cast<std::size_t>(std::unique(g.begin(), g.end()) - g.begin());
}

bool all_columns_constant(const Matrix& X) {
    for (Eigen::Index c = 0; c < X.cols(); ++c)
        if ((X.col(c).array() != X(0, c)).any()) return false;
    return true;
}

}  // namespace

const char* to_string(KTerm t) { return t == KTerm::diff ? "diff" : "ratio"; }

const char* to_string(SeType t) {
    switch (t) {
        case SeType::classical: return "classical";
        case SeType::robust: return "robust";
        case SeType::cluster: return "cluster";
    }
    return "unknown";
}

const char* to_string(PanelOutcome o) { return o == PanelOutcome::purchase ? "purchase" : "decision_time"; }

int ModelFit::index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

Design build_exp1_design(std::span<const ChoiceRow> rows, KTerm term, bool with_controls) {
    const std::size_t n_cov = kCovariateNames.size();
    Design d;
    d.names = {"(Intercept)", term == KTerm::diff ? "k1 - k2" : "k1/(k1+k2)"};
    if (with_controls)
        for (const char* c : kCovariateNames) d.names.push_back(std::string("d_") + c);

    std::vector<const ChoiceRow*> kept;
    for (const auto& r : rows) {
        if (r.y != 0 && r.y != 1) throw StatsError("choice outcome must be 0 or 1");
        if (with_controls) {
            if (r.x1.size() != n_cov || r.x2.size() != n_cov)
                throw StatsError("covariate vectors must have " + std::to_string(n_cov) + " entries");
            const auto missing = [](double v) { return !std::isfinite(v); };
            if (std::any_of(r.x1.begin(), r.x1.end(), missing) || std::any_of(r.x2.begin(), r.x2.end(), missing)) {
                ++d.rows_dropped;
                continue;
            }
        }
        kept.push_back(&r);
    }

    d.X.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(d.names.size()));
    d.y.resize(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& r = *kept[i];
        const auto row = static_cast<Eigen::Index>(i);
        d.X(row, 0) = 1.0;
        if (term == KTerm::diff) {
            d.X(row, 1) = r.k1 - r.k2;
        } else {
            if (!(r.k1 + r.k2 > 0.0)) throw StatsError("ratio term undefined: k1 + k2 must be positive");
            d.X(row, 1) = r.k1 / (r.k1 + r.k2);
        }
        if (with_controls)
            for (std::size_t c = 0; c < n_cov; ++c) d.X(row, static_cast<Eigen::Index>(2 + c)) = r.x1[c] - r.x2[c];
        d.y(row) = r.y;
        d.groups.push_back(r.participant_id);
    }
    return d;
}

ModelFit fit_logit(const Design& design, const LogitOptions& options) {
    const Matrix& X = design.X;
    const Vector& y = design.y;
    const auto n = X.rows();
    const auto p = X.cols();
    if (n == 0) throw StatsError("logit needs at least one observation");
    if (static_cast<std::size_t>(p) != design.names.size()) throw StatsError("design names do not match columns");
    for (Eigen::Index i = 0; i < n; ++i)
        if (y(i) != 0.0 && y(i) != 1.0) throw StatsError("logit outcome must be binary");
    require_full_rank(X, design.names);

    const double ybar = y.mean();
    if (ybar == 0.0 || ybar == 1.0) throw SeparationError("outcome has no variation; the MLE does not exist");

    ModelFit fit;
    fit.model = "logit";
    fit.outcome = "choice";
    fit.names = design.names;
    fit.n_obs = static_cast<int>(n);
    fit.rows_dropped = design.rows_dropped;
    fit.se = options.se;
    fit.fit_statistic_name = "pseudo-R2";

    Vector beta = Vector::Zero(p);
    Vector eta = X * beta;
    double ll = log_likelihood(eta, y);
    Vector prob(n);
    Vector grad(p);

    auto refresh = [&] {
        for (Eigen::Index i = 0; i < n; ++i) prob(i) = logistic(eta(i));
        grad = score_vector(X, y - prob);
    };
    refresh();

    auto separated = [&] {
        return ((y - prob).cwiseAbs().array() < 1e-6).all();
    };

    int it = 0;
    for (; it < options.max_iters; ++it) {
        if (grad.cwiseAbs().maxCoeff() < options.tol) {
            fit.converged = true;
            break;
        }
        if (separated()) throw SeparationError("complete separation: every observation is fitted exactly");
        const Vector w = prob.array() * (1.0 - prob.array());
        const Matrix info = X.transpose() * w.asDiagonal() * X;
        const Vector step = info.ldlt().solve(grad);
        if (!step.allFinite()) throw SeparationError("information matrix became singular; the data are separated");

        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            const Vector cand = beta + t * step;
            const Vector cand_eta = X * cand;
            const double cand_ll = log_likelihood(cand_eta, y);
            if (cand_ll >= ll - 1e-12 * std::abs(ll)) {
                beta = cand;
                eta = cand_eta;
                ll = cand_ll;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        refresh();
    }
    fit.iterations = it;
    fit.gradient_max_norm = grad.cwiseAbs().maxCoeff();
    if (!fit.converged && fit.gradient_max_norm < options.tol) fit.converged = true;

    const bool saturated = (eta.cwiseAbs().array() > 30.0).any();
    if (separated() || (saturated && !fit.converged) || (saturated && (y - prob).cwiseAbs().minCoeff() < 1e-13))
        throw SeparationError("quasi-complete separation: some fitted probabilities are numerically 0 or 1");
    if (!fit.converged)
        throw ConvergenceError("logit did not converge in " + std::to_string(options.max_iters) +
                               " iterations (|score|max = " + std::to_string(fit.gradient_max_norm) + ")");

    const Vector w = prob.array() * (1.0 - prob.array());
    const Matrix info = X.transpose() * w.asDiagonal() * X;
    const Matrix info_inv = info.ldlt().solve(Matrix::Identity(p, p));
    Matrix cov = info_inv;
    if (options.se == SeType::robust) {
        const Matrix scores = X.array().colwise() * (y - prob).array();
        cov = sandwich(info_inv, scores, nullptr, static_cast<double>(n) / static_cast<double>(n - 1));
    } else if (options.se == SeType::cluster) {
        if (design.groups.size() != static_cast<std::size_t>(n)) throw StatsError("cluster SEs need a group per row");
        const double g = static_cast<double>(count_groups(design.groups));
        if (g < 2) throw StatsError("cluster SEs need at least two clusters");
        const Matrix scores = X.array().colwise() * (y - prob).array();
        cov = sandwich(info_inv, scores, &design.groups, g / (g - 1.0));
    }

    fit.estimates = beta;
    fit.std_errors = cov.diagonal().cwiseSqrt();
    fit.statistics = fit.estimates.cwiseQuotient(fit.std_errors);
    fit.p_values.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) fit.p_values(j) = normal_two_sided_p(fit.statistics(j));

    fit.log_likelihood = ll;
    fit.null_log_likelihood = static_cast<double>(n) * (ybar * std::log(ybar) + (1.0 - ybar) * std::log1p(-ybar));
    fit.fit_statistic = all_columns_constant(X) ? 0.0 : 1.0 - fit.log_likelihood / fit.null_log_likelihood;
    fit.dof = static_cast<int>(n - p);
    return fit;
}

OlsResult ols(const Matrix& X, const Vector& y, std::span<const std::string> names) {
    if (X.rows() != y.size()) throw StatsError("row count mismatch between design and outcome");
    if (X.rows() <= X.cols()) throw StatsError("need more observations than regressors");
    require_full_rank(X, names);
    OlsResult r;
    Eigen::ColPivHouseholderQR<Matrix> qr(X);
    r.beta = qr.solve(y);
    r.residuals = y - X * r.beta;
    r.xtx_inverse = (X.transpose() * X).ldlt().solve(Matrix::Identity(X.cols(), X.cols()));
    return r;
}

ModelFit fit_fe_ols(std::span<const PanelRow> rows, PanelOutcome outcome, FeSpec spec, const OlsOptions& options) {
    if (rows.empty()) throw StatsError("empty panel");
    for (const auto& r : rows) {
        if (r.purchase != 0 && r.purchase != 1) throw StatsError("purchase must be 0 or 1");
        if (r.n_images < 1) throw StatsError("n_images must be at least 1");
        if (outcome == PanelOutcome::decision_time && !(r.decision_time > 0.0))
            throw StatsError("decision_time must be positive");
        if (!std::isfinite(r.k) || !std::isfinite(r.price)) throw StatsError("non-finite regressor");
    }
    const auto n = static_cast<Eigen::Index>(rows.size());

    std::vector<std::string> brands;
    if (spec.brand_fe) {
        for (const auto& r : rows) brands.push_back(r.brand_id);
        std::sort(brands.begin(), brands.end());
        brands.erase(std::unique(brands.begin(), brands.end()), brands.end());
    }

    std::vector<std::string> names;
    if (!spec.user_fe) names.push_back("(Intercept)");
    names.insert(names.end(), {kKScaled, kPriceScaled, kNImages});
    for (std::size_t b = 1; b < brands.size(); ++b) names.push_back("brand[" + brands[b] + "]");
    const auto p = static_cast<Eigen::Index>(names.size());

    Matrix X(n, p);
    Vector y(n);
    std::vector<std::string> groups(rows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        Eigen::Index c = 0;
        if (!spec.user_fe) X(i, c++) = 1.0;
        X(i, c++) = r.k / 1000.0;
        X(i, c++) = r.price / 1000.0;
        X(i, c++) = static_cast<double>(r.n_images);
        for (std::size_t b = 1; b < brands.size(); ++b) X(i, c++) = r.brand_id == brands[b] ? 1.0 : 0.0;
        y(i) = outcome == PanelOutcome::purchase ? static_cast<double>(r.purchase) : r.decision_time;
        groups[static_cast<std::size_t>(i)] = r.participant_id;
    }
    const double sst = (y.array() - y.mean()).square().sum();

    Eigen::Index absorbed = 0;
    if (spec.user_fe) {
        // Within transformation: subtract participant means from every column.
        const Vector scale = X.cwiseAbs().colwise().maxCoeff().transpose();
        std::map<std::string, std::vector<Eigen::Index>> members;
        for (Eigen::Index i = 0; i < n; ++i) members[groups[static_cast<std::size_t>(i)]].push_back(i);
        absorbed = static_cast<Eigen::Index>(members.size());
        for (const auto& [_, idx] : members) {
            Eigen::RowVectorXd xm = Eigen::RowVectorXd::Zero(p);
            double ym = 0.0;
            for (auto i : idx) {
                xm += X.row(i);
                ym += y(i);
            }
            xm /= static_cast<double>(idx.size());
            ym /= static_cast<double>(idx.size());
            for (auto i : idx) {
                X.row(i) -= xm;
                y(i) -= ym;
            }
        }
        // A column constant within every participant keeps only rounding residue.
        for (Eigen::Index c = 0; c < p; ++c)
            if (X.col(c).cwiseAbs().maxCoeff() <= 1e-12 * scale(c))
                throw RankDeficiencyError(names[static_cast<std::size_t>(c)], "no variation within participants");
    }

    const OlsResult res = ols(X, y, names);
    const Eigen::Index dof = n - absorbed - p;
    if (dof <= 0) throw StatsError("no residual degrees of freedom left");
    const double ssr = res.residuals.squaredNorm();

    Matrix cov;
    if (options.se == SeType::classical) {
        cov = (ssr / static_cast<double>(dof)) * res.xtx_inverse;
    } else {
        const Matrix scores = X.array().colwise() * res.residuals.array();
        if (options.se == SeType::robust) {
            cov = sandwich(res.xtx_inverse, scores, nullptr, static_cast<double>(n) / static_cast<double>(dof));
        } else {
            const double g = static_cast<double>(count_groups(groups));
            if (g < 2) throw StatsError("cluster SEs need at least two clusters");
            const double factor = g / (g - 1.0) * static_cast<double>(n - 1) / static_cast<double>(n - p);
            cov = sandwich(res.xtx_inverse, scores, &groups, factor);
        }
    }

    ModelFit fit;
    fit.model = "fe_ols";
    fit.outcome = to_string(outcome);
    fit.names = names;
    fit.estimates = res.beta;
    fit.std_errors = cov.diagonal().cwiseSqrt();
    fit.statistics = fit.estimates.cwiseQuotient(fit.std_errors);
    fit.dof = static_cast<int>(dof);
    fit.p_values.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) fit.p_values(j) = t_two_sided_p(fit.statistics(j), fit.dof);
    fit.n_obs = static_cast<int>(n);
    fit.fit_statistic_name = "R2";
    fit.fit_statistic = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    fit.converged = true;
    fit.se = options.se;
    fit.brand_fe = spec.brand_fe;
    fit.user_fe = spec.user_fe;
    return fit;
}

nlohmann::json to_json(const ModelFit& fit) {
    nlohmann::json coefs = nlohmann::json::array();
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        coefs.push_back({{"name", fit.names[j]},
                         {"estimate", fit.estimates(i)},
                         {"std_error", fit.std_errors(i)},
                         {"statistic", fit.statistics(i)},
                         {"p_value", fit.p_values(i)}});
    }
    return {{"model", fit.model},
            {"outcome", fit.outcome},
            {"label", fit.label},
            {"coefficients", coefs},
            {"n_obs", fit.n_obs},
            {"rows_dropped", fit.rows_dropped},
            {"dof", fit.dof},
            {"fit_statistic_name", fit.fit_statistic_name},
            {"fit_statistic", fit.fit_statistic},
            {"log_likelihood", fit.log_likelihood},
            {"null_log_likelihood", fit.null_log_likelihood},
            {"iterations", fit.iterations},
            {"converged", fit.converged},
            {"gradient_max_norm", fit.gradient_max_norm},
            {"se_type", to_string(fit.se)},
            {"brand_fe", fit.brand_fe},
            {"user_fe", fit.user_fe}};
}

}  // namespace imgk::stats
