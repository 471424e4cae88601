#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgk/matrix.hpp"

namespace imgk::stats {

/// Set-averaged image-quality covariates, in CSV column order.
inline constexpr std::array<const char*, 9> kCovariateNames = {
    "brightness", "contrast", "blur", "saturation", "colorfulness", "clarity", "aesthetic", "bw_degree", "purity"};

/// One pairwise comparison: did the participant judge set 1 more informative?
/// Missing covariates are stored as NaN.
struct ChoiceRow {
    std::string participant_id;
    std::string product_id;
    int y = 0;
    double k1 = 0.0;
    double k2 = 0.0;
    std::vector<double> x1;
    std::vector<double> x2;
};

/// One participant x product observation. k and price are raw (unscaled).
struct PanelRow {
    std::string participant_id;
    std::string product_id;
    std::string brand_id;
    std::string set_id;
    int purchase = 0;
    double decision_time = 0.0;  ///< seconds
    double k = 0.0;
    double price = 0.0;          ///< CNY
    int n_images = 1;
};

class StatsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class SeparationError : public StatsError {
public:
    using StatsError::StatsError;
};
class ConvergenceError : public StatsError {
public:
    using StatsError::StatsError;
};
class RankDeficiencyError : public StatsError {
public:
    RankDeficiencyError(const std::string& column, const std::string& why)
        : StatsError("rank deficiency in column '" + column + "': " + why), column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

enum class KTerm { diff, ratio };
enum class SeType { classical, robust, cluster };

const char* to_string(KTerm t);
const char* to_string(SeType t);

struct Design {
    Matrix X;
    Vector y;
    std::vector<std::string> names;
    std::vector<std::string> groups;  ///< participant id per kept row, for clustered SEs
    int rows_dropped = 0;
};

/// Intercept, the k term (k1 - k2 or k1 / (k1 + k2)), and optionally the
/// nine x1 - x2 covariate differences. With controls, rows that have a
/// missing covariate are dropped and counted.
Design build_exp1_design(std::span<const ChoiceRow> rows, KTerm term, bool with_controls);

struct LogitOptions {
    int max_iters = 100;
    double tol = 1e-10;  ///< on the max-norm of the score vector
    SeType se = SeType::classical;
};

struct ModelFit {
    std::string model;    ///< "logit" or "fe_ols"
    std::string outcome;  ///< "choice", "purchase", "decision_time"
    std::string label;    ///< free-form specification tag
    std::vector<std::string> names;
    Vector estimates;
    Vector std_errors;
    Vector statistics;  ///< z for logit, t for OLS
    Vector p_values;
    int n_obs = 0;
    int dof = 0;  ///< residual degrees of freedom (OLS)
    std::string fit_statistic_name;
    double fit_statistic = 0.0;
    double log_likelihood = 0.0;
    double null_log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    double gradient_max_norm = 0.0;
    SeType se = SeType::classical;
    bool brand_fe = false;
    bool user_fe = false;
    int rows_dropped = 0;

    /// Index of a named coefficient, -1 if absent.
    int index_of(const std::string& name) const;
};

/// Maximum-likelihood logit by IRLS with step halving.
/// `groups` is only read for SeType::cluster.
ModelFit fit_logit(const Design& design, const LogitOptions& options = {});

struct OlsResult {
    Vector beta;
    Vector residuals;
    Matrix xtx_inverse;
};

/// Least squares on a full-column-rank design; throws RankDeficiencyError
/// naming the first column that lies in the span of the earlier ones.
OlsResult ols(const Matrix& X, const Vector& y, std::span<const std::string> names);

enum class PanelOutcome { purchase, decision_time };
const char* to_string(PanelOutcome o);

struct FeSpec {
    bool brand_fe = false;
    bool user_fe = false;
};

struct OlsOptions {
    SeType se = SeType::classical;
};

/// Regressor names as they appear in fits and reports.
inline constexpr const char* kKScaled = "k/1000";
inline constexpr const char* kPriceScaled = "price/1000";
inline constexpr const char* kNImages = "n_images";

/// Linear model of the outcome on k/1000, price/1000 and n_images.
///
/// Participant effects are absorbed by demeaning within participant; brand
/// effects enter as indicators with the first brand (in sorted order) as the
/// reference. A global intercept is included only without participant effects.
/// R-squared is measured against the untransformed outcome.
ModelFit fit_fe_ols(std::span<const PanelRow> rows, PanelOutcome outcome, FeSpec spec, const OlsOptions& options = {});

enum class ReportStyle { exp1, exp2 };

struct Report {
    std::string text;
    std::string csv;
};

/// "***" for p < 0.01, "**" for p < 0.05, "*" for p < 0.1.
std::string significance_stars(double p_value);

/// Side-by-side coefficient table with standard errors in parentheses.
Report report_table(std::span<const ModelFit> fits, ReportStyle style);

nlohmann::json to_json(const ModelFit& fit);

}  // namespace imgk::stats
