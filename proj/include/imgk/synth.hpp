#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "imgk/embedding_io.hpp"
#include "imgk/matrix.hpp"
#include "imgk/stats.hpp"

namespace imgk::synth {

class SynthError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Isotropic Gaussian mixture with a known component count.
struct MixtureSpec {
    int k_true = 3;
    int points_per_component = 20;
    int dim = 2;
    double center_scale = 10.0;  ///< radius of the ball the centers are drawn from
    double within_std = 1.0;
    std::uint64_t seed = 0;
    /// Minimum center distance in units of within_std.
    double min_separation = 6.0;
    int max_attempts = 10000;  ///< rejection draws allowed per center

    double separation_ratio() const { return center_scale / within_std; }
};

struct Mixture {
    Matrix points;           ///< component blocks in label order
    std::vector<int> labels;
    Matrix centers;
};

/// Throws SynthError when the ball cannot host k_true separated centers.
Mixture gen_mixture(const MixtureSpec& spec);

/// Pseudo image set: `n_images` embedding matrices of `patches_per_image`
/// rows each, whose pooled rows are a shuffled draw from `mixture`.
/// Components get floor or ceil of (total / k_true) points each.
struct ImageSetSpec {
    MixtureSpec mixture;
    int n_images = 2;
    int patches_per_image = 196;
    std::string set_id = "synthetic";
    std::string model_tag = "synthetic-mixture";
};

struct ImageSet {
    ImageSetManifest manifest;
    std::vector<PatchEmbeddings> images;
    std::vector<int> labels;  ///< component of each pooled row, image-major
};

ImageSet gen_image_set(const ImageSetSpec& spec);

struct ChoiceSpec {
    /// (intercept, k term) or (intercept, k term, 9 covariate slopes).
    std::vector<double> beta = {0.0, 1.0};
    int n = 5000;
    stats::KTerm term = stats::KTerm::ratio;
    int k_lo = 50;   ///< k* drawn uniformly from [k_lo, k_hi]
    int k_hi = 500;
    int answers_per_participant = 10;
    std::uint64_t seed = 0;
};

/// Choice rows with y ~ Bernoulli(logistic(design * beta)); covariates N(0, 1).
std::vector<stats::ChoiceRow> gen_choice_data(const ChoiceSpec& spec);

enum class PanelMode {
    linear,  ///< decision_time = baseline + index + effects + noise
    binary,  ///< purchase = [u < baseline + index + effects], u ~ U(0, 1)
};

struct PanelSpec {
    /// Slopes on (k/1000, price/1000, n_images).
    double beta_k = -0.18;
    double beta_price = -0.08;
    double beta_images = 0.03;
    int n_users = 996;
    int products_per_user = 10;
    int n_products = 100;
    int n_brands = 6;
    double fe_std = 0.05;     ///< participant effect sd
    double brand_std = 0.05;  ///< brand effect sd
    double noise_std = 0.1;   ///< linear mode only
    double baseline = 0.5;
    PanelMode mode = PanelMode::binary;
    std::uint64_t seed = 0;
};

/// Binary mode: P(purchase = 1 | x) equals the clamped linear index, so
/// the slopes are the linear-probability-model targets whenever the
/// index stays inside [0, 1]. The unused outcome column gets a filler:
/// decision_time ~ 5 + Exp(mean 20) in binary mode, purchase = [index > 0]
/// in linear mode.
std::vector<stats::PanelRow> gen_panel(const PanelSpec& spec);

}  // namespace imgk::synth
