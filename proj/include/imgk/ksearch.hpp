#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "imgk/cluster.hpp"
#include "imgk/matrix.hpp"

namespace imgk {

class SearchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Upper bound on k when the caller does not set one.
inline constexpr int kDefaultKMaxBackstop = 1000;

struct SearchConfig {
    int k_min = 2;
    /// Unset means min(n - 1, kDefaultKMaxBackstop).
    std::optional<int> k_max;
    int step = 3;
    /// Consecutive grid evaluations allowed without a strict improvement.
    int patience = 100;
    std::uint64_t base_seed = 0;
    RestartParams restarts;  // restarts.runs is N

    void validate() const;
};

enum class StopReason { patience_exhausted, k_max_reached, grid_exhausted };

const char* to_string(StopReason r);
StopReason stop_reason_from_string(const std::string& s);

struct KStarResult {
    int k_star = 0;
    std::vector<SilhouetteSummary> trace;  ///< ascending k, one per evaluated grid point
    StopReason stop_reason = StopReason::grid_exhausted;
    SearchConfig config;
    int n_points = 0;

    const SilhouetteSummary& best() const;
};

/// Scores one k; the production evaluator is avg_silhouette.
using KEvaluator = std::function<SilhouetteSummary(int k)>;

/// Grid search over k = k_min, k_min + step, ... with the patience stop
/// rule; k* is the argmax of the mean silhouette, smallest k on ties.
KStarResult find_k_star(const Matrix& points, const SearchConfig& config);

/// Same search driven by an arbitrary evaluator over `n_points` points.
KStarResult find_k_star(int n_points, const SearchConfig& config, const KEvaluator& evaluate);

/// Per-k seed used by find_k_star for the restarts at `k`.
std::uint64_t seed_for_k(std::uint64_t base_seed, int k);

/// Writes `<stem>.csv` (k, silh_k, run_1..run_N) and `<stem>.json`
/// (config, stop reason, k*, per-run seeds). Doubles use 17 significant digits.
void dump_trace(const KStarResult& result, const std::filesystem::path& csv_path);

/// Inverse of dump_trace. Silhouette values round-trip bitwise.
KStarResult load_trace(const std::filesystem::path& csv_path);

}  // namespace imgk
