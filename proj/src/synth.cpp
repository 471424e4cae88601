#include "imgk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "imgk/seed.hpp"

namespace imgk::synth {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Uniform point in a d-ball: Gaussian direction, radius R * U^(1/d).
Vector draw_in_ball(std::mt19937_64& rng, int dim, double radius) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector v(dim);
    double norm = 0.0;
    do {
        for (int j = 0; j < dim; ++j) v(j) = normal(rng);
        norm = v.norm();
    } while (norm == 0.0);
    return v * (radius * std::pow(unif(rng), 1.0 / dim) / norm);
}

}  // namespace

Mixture gen_mixture(const MixtureSpec& spec) {
    if (spec.k_true < 1 || spec.points_per_component < 1 || spec.dim < 1)
        throw SynthError("mixture sizes must be positive");
    if (spec.within_std < 0.0 || spec.center_scale < 0.0) throw SynthError("scales must be non-negative");

    std::mt19937_64 rng(split_seed(spec.seed, 0));
    const double min_dist = spec.min_separation * spec.within_std;
    Mixture m;
    m.centers.resize(spec.k_true, spec.dim);
    for (int c = 0; c < spec.k_true; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
            const Vector cand = draw_in_ball(rng, spec.dim, spec.center_scale);
            placed = true;
            for (int o = 0; o < c && placed; ++o)
                placed = (m.centers.row(o).transpose() - cand).norm() >= min_dist;
            if (placed) m.centers.row(c) = cand.transpose();
        }
        if (!placed)
            throw SynthError("spec infeasible: cannot place " + std::to_string(spec.k_true) +
                             " centers at distance >= " + std::to_string(min_dist) + " inside radius " +
                             std::to_string(spec.center_scale));
    }

    std::mt19937_64 noise_rng(split_seed(spec.seed, 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(spec.k_true) * spec.points_per_component;
    m.points.resize(n, spec.dim);
    m.labels.resize(static_cast<std::size_t>(n));
    Eigen::Index row = 0;
    for (int c = 0; c < spec.k_true; ++c) {
        for (int p = 0; p < spec.points_per_component; ++p, ++row) {
            for (int j = 0; j < spec.dim; ++j) m.points(row, j) = m.centers(c, j) + spec.within_std * normal(noise_rng);
            m.labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return m;
}

ImageSet gen_image_set(const ImageSetSpec& spec) {
    if (spec.n_images < 1 || spec.patches_per_image < 1) throw SynthError("image set sizes must be positive");
    const int total = spec.n_images * spec.patches_per_image;
    const int k = spec.mixture.k_true;
    if (k < 1 || k > total) throw SynthError("k_true must lie in [1, total patches]");

    MixtureSpec ms = spec.mixture;
    ms.points_per_component = (total + k - 1) / k;
    const Mixture m = gen_mixture(ms);

    // Take rows round-robin over components so sizes differ by at most one,
    // then shuffle the pooled order.
    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(total));
    for (int t = 0; static_cast<int>(rows.size()) < total; ++t)
        for (int c = 0; c < k && static_cast<int>(rows.size()) < total; ++c)
            rows.push_back(static_cast<Eigen::Index>(c) * ms.points_per_component + t);
    std::mt19937_64 rng(split_seed(spec.mixture.seed, 2));
    for (std::size_t i = rows.size() - 1; i > 0; --i)
        std::swap(rows[i], rows[static_cast<std::size_t>(rng() % (i + 1))]);

    ImageSet out;
    out.manifest.set_id = spec.set_id;
    out.manifest.notes = "synthetic " + std::to_string(k) + "-component mixture";
    std::size_t next = 0;
    for (int img = 0; img < spec.n_images; ++img) {
        PatchEmbeddings e;
        e.image_id = spec.set_id + "_img" + std::to_string(img + 1);
        e.model_tag = spec.model_tag;
        e.patches.resize(spec.patches_per_image, ms.dim);
        for (int p = 0; p < spec.patches_per_image; ++p, ++next) {
            e.patches.row(p) = m.points.row(rows[next]).cast<float>();
            out.labels.push_back(m.labels[static_cast<std::size_t>(rows[next])]);
        }
        out.manifest.image_ids.push_back(e.image_id);
        out.images.push_back(std::move(e));
    }
    return out;
}

std::vector<stats::ChoiceRow> gen_choice_data(const ChoiceSpec& spec) {
    const std::size_t n_cov = stats::kCovariateNames.size();
    if (spec.n < 1) throw SynthError("n must be at least 1");
    if (spec.beta.size() != 2 && spec.beta.size() != 2 + n_cov)
        throw SynthError("beta must have 2 or " + std::to_string(2 + n_cov) + " entries");
    if (spec.k_lo < 1 || spec.k_hi < spec.k_lo) throw SynthError("invalid k range");
    if (spec.answers_per_participant < 1) throw SynthError("answers_per_participant must be positive");

    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> kdist(spec.k_lo, spec.k_hi);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<stats::ChoiceRow> rows(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        auto& r = rows[static_cast<std::size_t>(i)];
        r.participant_id = "p" + std::to_string(i / spec.answers_per_participant);
        r.product_id = "j" + std::to_string(i);
        r.k1 = kdist(rng);
        r.k2 = kdist(rng);
        r.x1.resize(n_cov);
        r.x2.resize(n_cov);
        for (auto& v : r.x1) v = normal(rng);
        for (auto& v : r.x2) v = normal(rng);
        const double kterm = spec.term == stats::KTerm::diff ? r.k1 - r.k2 : r.k1 / (r.k1 + r.k2);
        double eta = spec.beta[0] + spec.beta[1] * kterm;
        if (spec.beta.size() > 2)
            for (std::size_t c = 0; c < n_cov; ++c) eta += spec.beta[2 + c] * (r.x1[c] - r.x2[c]);
        r.y = unif(rng) < logistic(eta) ? 1 : 0;
    }
    return rows;
}

std::vector<stats::PanelRow> gen_panel(const PanelSpec& spec) {
    if (spec.n_users < 1 || spec.products_per_user < 1 || spec.n_products < 1 || spec.n_brands < 1)
        throw SynthError("panel sizes must be positive");
    if (spec.fe_std < 0.0 || spec.brand_std < 0.0 || spec.noise_std < 0.0) throw SynthError("sds must be non-negative");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> kdist(50, 500);
    std::uniform_int_distribution<int> imgdist(1, 5);
    std::exponential_distribution<double> wait(1.0 / 20.0);

    struct ImageSet {
        double k;
        int n_images;
    };
    struct Product {
        int brand;
        double price;
        ImageSet sets[2];
    };
    const int n_products = std::max(spec.n_products, spec.products_per_user);
    std::vector<Product> catalog(static_cast<std::size_t>(n_products));
    for (auto& p : catalog) {
        p.brand = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.n_brands));
        p.price = 50.0 + 950.0 * unif(rng);
        for (auto& s : p.sets) s = {static_cast<double>(kdist(rng)), imgdist(rng)};
    }
    std::vector<double> brand_effect(static_cast<std::size_t>(spec.n_brands));
    for (auto& b : brand_effect) b = spec.brand_std * normal(rng);

    std::vector<stats::PanelRow> rows;
    rows.reserve(static_cast<std::size_t>(spec.n_users) * static_cast<std::size_t>(spec.products_per_user));
    std::vector<int> order(static_cast<std::size_t>(n_products));
    for (int u = 0; u < spec.n_users; ++u) {
        const double user_effect = spec.fe_std * normal(rng);
        std::iota(order.begin(), order.end(), 0);
        // Partial shuffle picks distinct products for this participant.
        for (int t = 0; t < spec.products_per_user; ++t) {
            const auto j = static_cast<std::size_t>(t) +
                           static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n_products - t));
            std::swap(order[static_cast<std::size_t>(t)], order[j]);
        }
        for (int t = 0; t < spec.products_per_user; ++t) {
            const int pid = order[static_cast<std::size_t>(t)];
            const auto& prod = catalog[static_cast<std::size_t>(pid)];
            const int s = static_cast<int>(rng() & 1U);
            const auto& set = prod.sets[s];

            stats::PanelRow r;
            r.participant_id = "u" + std::to_string(u);
            r.product_id = "j" + std::to_string(pid);
            r.brand_id = "b" + std::to_string(prod.brand);
            r.set_id = r.product_id + "_s" + std::to_string(s + 1);
            r.k = set.k;
            r.price = prod.price;
            r.n_images = set.n_images;
            const double index = spec.beta_k * set.k / 1000.0 + spec.beta_price * prod.price / 1000.0 +
                                 spec.beta_images * set.n_images + brand_effect[static_cast<std::size_t>(prod.brand)] +
                                 user_effect;
            if (spec.mode == PanelMode::binary) {
                r.purchase = unif(rng) < spec.baseline + index ? 1 : 0;
                r.decision_time = 5.0 + wait(rng);
            } else {
                r.decision_time = spec.baseline + index + spec.noise_std * normal(rng);
                r.purchase = index > 0.0 ? 1 : 0;
            }
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

}  // namespace imgk::synth
