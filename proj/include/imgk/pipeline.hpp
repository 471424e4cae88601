#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgk/embedding_io.hpp"
#include "imgk/ksearch.hpp"
#include "imgk/pca.hpp"

namespace imgk {

struct PipelineConfig {
    int pca_components = 100;
    SearchConfig search;
    /// When set, every set is projected with this model instead of a per-set fit.
    std::optional<PcaModel> shared_pca;
};

/// Canonical JSON of everything that influences a KValue.
nlohmann::json config_to_json(const PipelineConfig& config);

/// FNV-1a 64 of the canonical config JSON, as 16 hex digits.
std::string config_hash(const PipelineConfig& config);

/// Information-richness score of one image set.
struct KValue {
    std::string set_id;
    int k_star = 0;
    int n_images = 0;
    int n_points = 0;
    int pca_components = 0;  ///< L_eff
    double pca_cumvar = 0.0; ///< cumulative explained variance at L_eff
    KStarResult search;
    std::string config_hash;
};

enum class Stage { stack, pca, search };
const char* to_string(Stage s);

class StageError : public std::runtime_error {
public:
    StageError(Stage stage, const std::string& what)
        : std::runtime_error(std::string(to_string(stage)) + ": " + what), stage_(stage) {}
    Stage stage() const noexcept { return stage_; }

private:
    Stage stage_;
};

/// stack_set -> fit_pca -> transform -> find_k_star. Failures are rethrown
/// as StageError tagged with the failing stage.
KValue score_set(const ImageSetManifest& manifest, const EmbeddingStore& store, const PipelineConfig& config);

struct SetOutcome {
    std::string set_id;
    std::optional<KValue> value;
    std::optional<Stage> failed_stage;
    std::string error;

    bool ok() const { return value.has_value(); }
};

/// Scores every manifest, up to `parallelism` sets at a time. Output order
/// follows input order; a failing set is recorded and does not stop the batch.
std::vector<SetOutcome> score_corpus(const std::vector<ImageSetManifest>& manifests, const EmbeddingStore& store,
                                     const PipelineConfig& config, int parallelism);

nlohmann::json to_json(const KValue& v);

/// One JSON object per line for the scored sets.
void write_kvalues_jsonl(const std::vector<SetOutcome>& outcomes, const std::filesystem::path& path);

/// set_id,k_star,n_images,cumvar for the scored sets.
void write_index_csv(const std::vector<SetOutcome>& outcomes, const std::filesystem::path& path);

/// set_id,status,stage,error for every set.
void write_failure_ledger(const std::vector<SetOutcome>& outcomes, const std::filesystem::path& path);

}  // namespace imgk
