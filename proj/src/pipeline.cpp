#include "imgk/pipeline.hpp"

#include <cstdio>
#include <fstream>

namespace imgk {

const char* to_string(Stage s) {
    switch (s) {
        case Stage::stack: return "stack";
        case Stage::pca: return "pca";
        case Stage::search: return "search";
    }
    return "unknown";
}

nlohmann::json config_to_json(const PipelineConfig& config) {
    const auto& s = config.search;
    return {{"pca_components", config.pca_components},
            {"shared_pca", config.shared_pca.has_value()},
            {"k_min", s.k_min},
            {"k_max", s.k_max ? nlohmann::json(*s.k_max) : nlohmann::json(nullptr)},
            {"step", s.step},
            {"patience", s.patience},
            {"base_seed", s.base_seed},
            {"runs", s.restarts.runs},
            {"max_iters", s.restarts.kmeans.max_iters},
            {"tol", s.restarts.kmeans.tol},
            {"silhouette_sample_size", s.restarts.silhouette.sample_size},
            {"silhouette_sample_seed", s.restarts.silhouette.sample_seed}};
}

std::string config_hash(const PipelineConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config_to_json(config).dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

KValue score_set(const ImageSetManifest& manifest, const EmbeddingStore& store, const PipelineConfig& config) {
    StackedSet stacked;
    try {
        stacked = stack_set(manifest, store);
    } catch (const std::exception& ex) {
        throw StageError(Stage::stack, ex.what());
    }

    Matrix projected;
    KValue out;
    try {
        const Matrix points = stacked.points.cast<double>();
        const PcaModel model = config.shared_pca ? *config.shared_pca : fit_pca(points, config.pca_components);
        projected = transform(model, points);
        out.pca_components = model.num_components();
        const auto curve = variance_report(model);
        out.pca_cumvar = curve.empty() ? 0.0 : curve.back();
    } catch (const std::exception& ex) {
        throw StageError(Stage::pca, ex.what());
    }

    try {
        out.search = find_k_star(projected, config.search);
    } catch (const std::exception& ex) {
        throw StageError(Stage::search, ex.what());
    }
    out.set_id = manifest.set_id;
    out.k_star = out.search.k_star;
    out.n_images = static_cast<int>(manifest.image_ids.size());
    out.n_points = static_cast<int>(stacked.points.rows());
    out.config_hash = config_hash(config);
    return out;
}

std::vector<SetOutcome> score_corpus(const std::vector<ImageSetManifest>& manifests, const EmbeddingStore& store,
                                     const PipelineConfig& config, int parallelism) {
    if (parallelism < 1) throw std::invalid_argument("parallelism must be positive");
    std::vector<SetOutcome> out(manifests.size());
    const auto n = static_cast<long>(manifests.size());
#pragma omp parallel for num_threads(parallelism) schedule(dynamic, 1) if (parallelism > 1)
    for (long i = 0; i < n; ++i) {
        auto& o = out[static_cast<std::size_t>(i)];
        const auto& m = manifests[static_cast<std::size_t>(i)];
        o.set_id = m.set_id;
        try {
            o.value = score_set(m, store, config);
        } catch (const StageError& ex) {
            o.failed_stage = ex.stage();
            o.error = ex.what();
        } catch (const std::exception& ex) {
            o.error = ex.what();
        }
    }
    return out;
}

nlohmann::json to_json(const KValue& v) {
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& t : v.search.trace) curve.push_back({t.k, t.mean_score});
    return {{"set_id", v.set_id},
            {"k_star", v.k_star},
            {"n_images", v.n_images},
            {"n_points", v.n_points},
            {"pca_components", v.pca_components},
            {"pca_cumvar", v.pca_cumvar},
            {"stop_reason", to_string(v.search.stop_reason)},
            {"silhouette_curve", curve},
            {"config_hash", v.config_hash}};
}

void write_kvalues_jsonl(const std::vector<SetOutcome>& outcomes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& o : outcomes)
        if (o.ok()) out << to_json(*o.value).dump() << '\n';
}

void write_index_csv(const std::vector<SetOutcome>& outcomes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "set_id,k_star,n_images,cumvar\n";
    char buf[32];
    for (const auto& o : outcomes) {
        if (!o.ok()) continue;
        std::snprintf(buf, sizeof buf, "%.17g", o.value->pca_cumvar);
        out << o.set_id << ',' << o.value->k_star << ',' << o.value->n_images << ',' << buf << '\n';
    }
}

void write_failure_ledger(const std::vector<SetOutcome>& outcomes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "set_id,status,stage,error\n";
    for (const auto& o : outcomes) {
        std::string err = o.error;
        for (auto& c : err)
            if (c == ',' || c == '\n') c = ';';
        out << o.set_id << ',' << (o.ok() ? "ok" : "failed") << ','
            << (o.failed_stage ? to_string(*o.failed_stage) : "") << ',' << err << '\n';
    }
}

}  // namespace imgk
