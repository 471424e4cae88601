#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imgk/matrix.hpp"

namespace imgk::validate {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

using SilhouetteFn = std::function<double(const Matrix&, std::span<const int>)>;

struct Options {
    /// Fewer replications per check, same pass ratios.
    bool quick = false;
    std::uint64_t seed = 20240601;
    /// Implementation under test for the silhouette oracle check.
    SilhouetteFn silhouette;
    /// Progress lines go here when set.
    std::function<void(const std::string&)> log;
};

/// k* recovery on separated Gaussian mixtures, k_true in {2, 5, 8, 11}.
CheckResult check_k_recovery(const Options& opts);
/// Silhouette vs the all-pairs oracle on random small instances, 1e-10.
CheckResult check_silhouette_oracle(const Options& opts);
/// PCA ratios and subspaces vs a covariance eigendecomposition, 1e-8.
CheckResult check_pca_oracle(const Options& opts);
/// avg_silhouette with N = 30 is bitwise identical for 1, 4 and 8 threads.
CheckResult check_restart_determinism(const Options& opts);
/// Injected peaked curve: exactly 3 + patience evaluations, k* at the peak.
CheckResult check_stopping_rule(const Options& opts);
/// Logit slope coverage on the ratio spec plus score-norm bound.
CheckResult check_logit_recovery(const Options& opts);
/// Within estimator == LSDV, and slope coverage on 9960-row panels.
CheckResult check_fe_ols(const Options& opts);
/// Synthetic 6-cluster image set through KEMB files and score_set.
CheckResult check_end_to_end(const Options& opts);

std::vector<CheckResult> run_all(const Options& opts);

/// Smallest success count that keeps the full-size pass ratio
/// `required / total` when only `trials` replications are run.
int scaled_threshold(int required, int total, int trials);

}  // namespace imgk::validate
