#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "imgk/matrix.hpp"

namespace imgk {

/// Model tag written by the reference ViT-L/16 extractor.
inline constexpr const char* kReferenceModelTag = "vit-l16-in21k";
inline constexpr int kReferencePatches = 196;
inline constexpr int kReferenceWidth = 1024;

/// One image's patch-embedding matrix, shape (P, D).
struct PatchEmbeddings {
    std::string image_id;
    std::string model_tag;
    MatrixF patches;

    int num_patches() const { return static_cast<int>(patches.rows()); }
    int width() const { return static_cast<int>(patches.cols()); }

    bool operator==(const PatchEmbeddings& other) const;
};

struct ImageSetManifest {
    std::string set_id;
    std::vector<std::string> image_ids;
    std::string notes;
};

struct RowProvenance {
    std::string image_id;
    int patch_index = 0;
};

/// Pooled embeddings of an image set; rows ordered by image, then patch.
struct StackedSet {
    std::string set_id;
    std::string model_tag;
    MatrixF points;
    std::vector<RowProvenance> row_provenance;
};

enum class KembErrc {
    io,
    bad_magic,
    version_mismatch,
    unsupported_dtype,
    truncated,
    shape_mismatch,
    bad_metadata,
    validation,
};

const char* to_string(KembErrc code);

class KembError : public std::runtime_error {
public:
    KembError(KembErrc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}
    KembErrc code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    KembErrc code_;
    std::string detail_;
};

class StackError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws KembError(validation) if `e` breaks a PatchEmbeddings invariant:
/// empty shape, non-finite entry, or a reference-tagged matrix not (196, 1024).
void validate_embeddings(const PatchEmbeddings& e);

/// Serializes to the KEMB byte layout. Output depends only on `e`.
std::vector<std::uint8_t> encode_kemb(const PatchEmbeddings& e);
PatchEmbeddings decode_kemb(const std::vector<std::uint8_t>& bytes);

void write_embeddings(const PatchEmbeddings& e, const std::filesystem::path& path);
PatchEmbeddings read_embeddings(const std::filesystem::path& path);

ImageSetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const ImageSetManifest& manifest, const std::filesystem::path& path);

/// Read-only lookup of embeddings by image id. Implementations must be safe
/// to query concurrently.
class EmbeddingStore {
public:
    virtual ~EmbeddingStore() = default;
    virtual PatchEmbeddings get(const std::string& image_id) const = 0;
};

class MemoryStore : public EmbeddingStore {
public:
    MemoryStore() = default;
    explicit MemoryStore(std::map<std::string, PatchEmbeddings> items) : items_(std::move(items)) {}

    void put(PatchEmbeddings e);
    PatchEmbeddings get(const std::string& image_id) const override;

private:
    std::map<std::string, PatchEmbeddings> items_;
};

/// Resolves `<root>/<image_id>.kemb` on every lookup.
class DirectoryStore : public EmbeddingStore {
public:
    explicit DirectoryStore(std::filesystem::path root);
    PatchEmbeddings get(const std::string& image_id) const override;
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

StackedSet stack_set(const ImageSetManifest& manifest, const EmbeddingStore& store);

}  // namespace imgk
