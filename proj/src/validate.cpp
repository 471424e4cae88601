#include "imgk/validate.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "imgk/cluster.hpp"
#include "imgk/embedding_io.hpp"
#include "imgk/ksearch.hpp"
#include "imgk/oracle.hpp"
#include "imgk/pca.hpp"
#include "imgk/pipeline.hpp"
#include "imgk/seed.hpp"
#include "imgk/stats.hpp"
#include "imgk/synth.hpp"

namespace imgk::validate {

namespace {

constexpr double kZ975 = 1.959963984540054;

template <typename Body>
CheckResult timed(const std::string& name, Body&& body) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r{name, false, "", 0.0};
    try {
        body(r);
    } catch (const std::exception& ex) {
        r.passed = false;
        r.detail = std::string("exception: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

void note(const Options& opts, const std::string& line) {
    if (opts.log) opts.log(line);
}

Matrix random_normal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

bool covers(double estimate, double se, double truth) { return std::abs(estimate - truth) <= kZ975 * se; }

}  // namespace

int scaled_threshold(int required, int total, int trials) {
    return static_cast<int>(std::ceil(static_cast<double>(required) * trials / total - 1e-12));
}

CheckResult check_k_recovery(const Options& opts) {
    return timed("k-recovery", [&](CheckResult& r) {
        const int trials = opts.quick ? 5 : 20;
        const int need = scaled_threshold(19, 20, trials);
        SearchConfig cfg;
        cfg.k_min = 2;
        cfg.step = 3;
        cfg.patience = 5;
        cfg.restarts.runs = 30;
        std::ostringstream detail;
        bool ok = true;
        for (int k_true : {2, 5, 8, 11}) {
            int hits = 0;
            for (int t = 0; t < trials; ++t) {
                synth::MixtureSpec spec;
                spec.k_true = k_true;
                spec.points_per_component = 30;
                spec.dim = 100;
                spec.within_std = 1.0;
                spec.center_scale = 8.0;
                spec.seed = split_seed(opts.seed, static_cast<std::uint64_t>(k_true * 1000 + t));
                const auto mix = synth::gen_mixture(spec);
                cfg.base_seed = spec.seed;
                const auto res = find_k_star(mix.points, cfg);
                hits += res.k_star == k_true ? 1 : 0;
            }
            detail << "k=" << k_true << ": " << hits << "/" << trials << "  ";
            note(opts, "  k-recovery k_true=" + std::to_string(k_true) + " " + std::to_string(hits) + "/" +
                           std::to_string(trials));
            ok = ok && hits >= need;
        }
        detail << "(need " << need << " each; separation ratio 8, dim 100, 30 pts/component)";
        r.passed = ok;
        r.detail = detail.str();
    });
}

CheckResult check_silhouette_oracle(const Options& opts) {
    return timed("silhouette-oracle", [&](CheckResult& r) {
        const int instances = opts.quick ? 50 : 200;
        const SilhouetteFn impl = opts.silhouette ? opts.silhouette : SilhouetteFn([](const Matrix& p, std::span<const int> l) {
            return silhouette(p, l);
        });
        std::mt19937_64 rng(split_seed(opts.seed, 0x5117));
        double worst = 0.0;
        for (int t = 0; t < instances; ++t) {
            const int k = 2 + static_cast<int>(rng() % 4);
            const int n = std::max(k + 1, 3 + static_cast<int>(rng() % 48));
            const int dim = 1 + static_cast<int>(rng() % 8);
            Matrix pts = random_normal(rng, n, dim);
            // Some exact duplicates exercise the a = b = 0 convention.
            if (t % 7 == 0) pts.row(1) = pts.row(0);
            std::vector<int> labels(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i < k ? i : static_cast<int>(rng() % k);
            std::shuffle(labels.begin(), labels.end(), rng);
            const double fast = impl(pts, labels);
            const double cached = SilhouetteScorer(pts).score(labels);
            const double slow = oracle::naive_silhouette(pts, labels);
            worst = std::max({worst, std::abs(fast - slow), std::abs(cached - slow)});
        }
        r.passed = worst <= 1e-10;
        std::ostringstream d;
        d << instances << " instances, max |fast - oracle| = " << worst << " (tol 1e-10)";
        r.detail = d.str();
    });
}

CheckResult check_pca_oracle(const Options& opts) {
    return timed("pca-oracle", [&](CheckResult& r) {
        const int matrices = opts.quick ? 5 : 20;
        std::mt19937_64 rng(split_seed(opts.seed, 0x9ca));
        double worst_ratio = 0.0;
        double worst_proj = 0.0;
        for (int t = 0; t < matrices; ++t) {
            Matrix pts = random_normal(rng, 200, 50);
            for (Eigen::Index c = 0; c < pts.cols(); ++c) pts.col(c) *= 1.0 + 0.1 * static_cast<double>(c);
            pts.rowwise() += random_normal(rng, 1, 50).row(0) * 3.0;
            const auto model = fit_pca(pts, 100);
            const auto ref = oracle::covariance_pca(pts);
            if (model.num_components() != 50) throw std::runtime_error("unexpected L_eff");
            worst_ratio = std::max(worst_ratio,
                                   (model.explained_variance_ratio - ref.ratios.head(50)).cwiseAbs().maxCoeff());
            for (int L : {5, 20, 50}) {
                const double dist = oracle::projector_distance(model.components.topRows(L), ref.eigenvectors.topRows(L));
                worst_proj = std::max(worst_proj, dist);
            }
        }
        r.passed = worst_ratio <= 1e-8 && worst_proj <= 1e-8;
        std::ostringstream d;
        d << matrices << " matrices (200x50): max ratio error " << worst_ratio << ", max projector distance "
          << worst_proj << " (tol 1e-8)";
        r.detail = d.str();
    });
}

CheckResult check_restart_determinism(const Options& opts) {
    return timed("restart-determinism", [&](CheckResult& r) {
        synth::MixtureSpec spec;
        spec.k_true = 4;
        spec.points_per_component = 50;
        spec.dim = 10;
        spec.center_scale = 6.0;
        spec.within_std = 1.0;
        spec.seed = split_seed(opts.seed, 0xde7);
        const auto mix = synth::gen_mixture(spec);
        RestartParams params;
        params.runs = 30;
        std::vector<SilhouetteSummary> results;
        for (int threads : {1, 4, 8}) {
            params.threads = threads;
            results.push_back(avg_silhouette(mix.points, 4, 77, params));
        }
        bool same = true;
        for (const auto& s : results) {
            same = same && s.per_run_scores.size() == results[0].per_run_scores.size() &&
                   std::memcmp(s.per_run_scores.data(), results[0].per_run_scores.data(),
                               sizeof(double) * s.per_run_scores.size()) == 0 &&
                   std::memcmp(&s.mean_score, &results[0].mean_score, sizeof(double)) == 0 && s.seeds == results[0].seeds;
        }
        r.passed = same;
        std::ostringstream d;
        d.precision(17);
        d << "N=30, threads 1/4/8, silh_k = " << results[0].mean_score << (same ? " (bitwise equal)" : " (MISMATCH)");
        r.detail = d.str();
    });
}

CheckResult check_stopping_rule(const Options&) {
    return timed("stopping-rule", [&](CheckResult& r) {
        std::ostringstream d;
        bool ok = true;
        for (int patience : {1, 4, 100}) {
            SearchConfig cfg;
            cfg.patience = patience;
            int calls = 0;
            const auto res = find_k_star(1000, cfg, [&](int k) {
                ++calls;
                const int g = (k - cfg.k_min) / cfg.step;
                SilhouetteSummary s;
                s.k = k;
                s.mean_score = g <= 2 ? 0.2 * (g + 1) : 0.6 - 0.001 * (g - 2);
                s.per_run_scores = {s.mean_score};
                return s;
            });
            const int peak = cfg.k_min + 2 * cfg.step;
            const bool good = calls == 3 + patience && static_cast<int>(res.trace.size()) == calls &&
                              res.k_star == peak && res.stop_reason == StopReason::patience_exhausted;
            d << "patience " << patience << ": " << calls << " evals, k*=" << res.k_star << "; ";
            ok = ok && good;
        }
        r.passed = ok;
        r.detail = d.str();
    });
}

CheckResult check_logit_recovery(const Options& opts) {
    return timed("logit-recovery", [&](CheckResult& r) {
        const int reps = opts.quick ? 10 : 50;
        const int need = scaled_threshold(45, 50, reps);
        int covered = 0;
        double worst_grad = 0.0;
        for (int rep = 0; rep < reps; ++rep) {
            synth::ChoiceSpec spec;
            spec.beta = {0.0, 1.0};
            spec.n = 5000;
            spec.term = stats::KTerm::ratio;
            spec.seed = split_seed(opts.seed, 0x1061 + static_cast<std::uint64_t>(rep));
            const auto rows = synth::gen_choice_data(spec);
            const auto design = stats::build_exp1_design(rows, stats::KTerm::ratio, false);
            const auto fit = stats::fit_logit(design);
            worst_grad = std::max(worst_grad, fit.gradient_max_norm);
            covered += covers(fit.estimates(1), fit.std_errors(1), 1.0) ? 1 : 0;
        }
        r.passed = covered >= need && worst_grad < 1e-10;
        std::ostringstream d;
        d << "beta1=1.0 inside 95% CI in " << covered << "/" << reps << " (need " << need
          << "), max |score| = " << worst_grad << " (tol 1e-10)";
        r.detail = d.str();
    });
}

CheckResult check_fe_ols(const Options& opts) {
    return timed("fe-ols", [&](CheckResult& r) {
        const int panels = opts.quick ? 20 : 100;
        std::mt19937_64 rng(split_seed(opts.seed, 0xfe));
        std::normal_distribution<double> normal(0.0, 1.0);
        double worst = 0.0;
        const stats::FeSpec specs[] = {{true, true}, {false, true}, {true, false}, {false, false}};
        for (int t = 0; t < panels; ++t) {
            // Unbalanced: each participant has 2..15 rows; at most 200 rows.
            std::vector<stats::PanelRow> rows;
            const int users = 4 + static_cast<int>(rng() % 10);
            const int brand_count = 2 + static_cast<int>(rng() % 5);
            for (int u = 0; u < users && rows.size() < 200; ++u) {
                const int m = 2 + static_cast<int>(rng() % 14);
                const double effect = normal(rng);
                for (int j = 0; j < m && rows.size() < 200; ++j) {
                    stats::PanelRow row;
                    row.participant_id = "u" + std::to_string(u);
                    row.product_id = "j" + std::to_string(rows.size());
                    row.brand_id = "b" + std::to_string(rng() % static_cast<std::uint64_t>(brand_count));
                    row.k = 50.0 + static_cast<double>(rng() % 451);
                    row.price = 50.0 + 950.0 * std::abs(normal(rng)) / 3.0;
                    row.n_images = 1 + static_cast<int>(rng() % 5);
                    row.decision_time = 30.0 - 2.0 * row.k / 1000.0 + 0.5 * row.n_images + effect + normal(rng);
                    row.purchase = normal(rng) > 0 ? 1 : 0;
                    rows.push_back(row);
                }
            }
            for (const auto& spec : specs) {
                for (auto outcome : {stats::PanelOutcome::decision_time, stats::PanelOutcome::purchase}) {
                    const auto fit = stats::fit_fe_ols(rows, outcome, spec);
                    const Vector ref = oracle::lsdv_coefficients(rows, outcome, spec);
                    const int offset = spec.user_fe ? 0 : 1;
                    for (Eigen::Index j = 0; j < ref.size(); ++j)
                        worst = std::max(worst, std::abs(fit.estimates(j + offset) - ref(j)) /
                                                    std::max(1.0, std::abs(ref(j))));
                }
            }
        }

        const int reps = opts.quick ? 10 : 50;
        const int need = scaled_threshold(45, 50, reps);
        int cover[3] = {0, 0, 0};
        int n_obs = 0;
        for (int rep = 0; rep < reps; ++rep) {
            synth::PanelSpec spec;
            spec.seed = split_seed(opts.seed, 0xa11 + static_cast<std::uint64_t>(rep));
            const auto rows = synth::gen_panel(spec);
            n_obs = static_cast<int>(rows.size());
            const auto fit = stats::fit_fe_ols(rows, stats::PanelOutcome::purchase, {true, true});
            const double truth[3] = {spec.beta_k, spec.beta_price, spec.beta_images};
            const char* names[3] = {stats::kKScaled, stats::kPriceScaled, stats::kNImages};
            for (int s = 0; s < 3; ++s) {
                const int j = fit.index_of(names[s]);
                cover[s] += covers(fit.estimates(j), fit.std_errors(j), truth[s]) ? 1 : 0;
            }
        }
        r.passed = worst <= 1e-8 && n_obs == 9960 && cover[0] >= need && cover[1] >= need && cover[2] >= need;
        std::ostringstream d;
        d << panels << " unbalanced panels: max |within - LSDV| = " << worst << " (tol 1e-8); " << n_obs
          << "-row panels, CI coverage k/price/NImage = " << cover[0] << "/" << cover[1] << "/" << cover[2] << " of "
          << reps << " (need " << need << ")";
        r.detail = d.str();
    });
}

CheckResult check_end_to_end(const Options& opts) {
    return timed("end-to-end", [&](CheckResult& r) {
        synth::ImageSetSpec spec;
        spec.mixture.k_true = 6;
        spec.mixture.dim = 128;
        spec.mixture.center_scale = 30.0;
        spec.mixture.within_std = 1.0;
        spec.mixture.seed = split_seed(opts.seed, 0xe2e);
        spec.n_images = 2;
        spec.set_id = "six";
        const auto set = synth::gen_image_set(spec);

        const auto dir = std::filesystem::temp_directory_path() /
                         ("imgk-validate-" + std::to_string(split_seed(opts.seed, 0xd1)));
        std::filesystem::create_directories(dir);
        for (const auto& img : set.images) write_embeddings(img, dir / (img.image_id + ".kemb"));
        const DirectoryStore store(dir);

        PipelineConfig cfg;
        cfg.search.k_min = 3;
        cfg.search.patience = 10;
        cfg.search.base_seed = 7;
        const auto value = score_set(set.manifest, store, cfg);
        std::filesystem::remove_all(dir);
        r.passed = value.k_star == 6 && value.n_points == 392;
        std::ostringstream d;
        d << "6-component pseudo image set (2 x 196 patches): k* = " << value.k_star << ", L_eff = "
          << value.pca_components << ", evaluated " << value.search.trace.size() << " grid points";
        r.detail = d.str();
    });
}

std::vector<CheckResult> run_all(const Options& opts) {
    std::vector<CheckResult> out;
    for (auto* check : {check_k_recovery, check_silhouette_oracle, check_pca_oracle, check_restart_determinism,
                        check_stopping_rule, check_logit_recovery, check_fe_ols, check_end_to_end}) {
        out.push_back(check(opts));
        note(opts, std::string(out.back().passed ? "PASS " : "FAIL ") + out.back().name + ": " + out.back().detail);
    }
    return out;
}

}  // namespace imgk::validate
