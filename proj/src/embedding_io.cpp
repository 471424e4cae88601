#include "imgk/embedding_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

namespace imgk {

namespace {

constexpr std::uint8_t kMagic[4] = {'K', 'E', 'M', 'B'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeFloat32 = 0x01;
constexpr std::size_t kHeaderSize = 20;

static_assert(std::endian::native == std::endian::little,
              "KEMB encoding assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

const char* to_string(KembErrc code) {
    switch (code) {
        case KembErrc::io: return "io error";
        case KembErrc::bad_magic: return "bad magic";
        case KembErrc::version_mismatch: return "version mismatch";
        case KembErrc::unsupported_dtype: return "unsupported dtype";
        case KembErrc::truncated: return "truncated";
        case KembErrc::shape_mismatch: return "shape mismatch";
        case KembErrc::bad_metadata: return "bad metadata";
        case KembErrc::validation: return "validation error";
    }
    return "unknown";
}

bool PatchEmbeddings::operator==(const PatchEmbeddings& other) const {
    if (image_id != other.image_id || model_tag != other.model_tag) return false;
    if (patches.rows() != other.patches.rows() || patches.cols() != other.patches.cols()) return false;
    return std::memcmp(patches.data(), other.patches.data(),
                       sizeof(float) * static_cast<std::size_t>(patches.size())) == 0;
}

void validate_embeddings(const PatchEmbeddings& e) {
    if (e.image_id.empty()) throw KembError(KembErrc::validation, "empty image_id");
    if (e.patches.rows() < 1 || e.patches.cols() < 1)
        throw KembError(KembErrc::validation, "empty embedding matrix for '" + e.image_id + "'");
    if (!e.patches.allFinite())
        throw KembError(KembErrc::validation, "non-finite entry in '" + e.image_id + "'");
    if (e.model_tag == kReferenceModelTag &&
        (e.num_patches() != kReferencePatches || e.width() != kReferenceWidth)) {
        throw KembError(KembErrc::shape_mismatch,
                        "reference model tag requires (196, 1024), got (" +
                            std::to_string(e.num_patches()) + ", " + std::to_string(e.width()) + ")");
    }
}

std::vector<std::uint8_t> encode_kemb(const PatchEmbeddings& e) {
    validate_embeddings(e);
    // Key order is fixed by nlohmann's sorted object map, so the bytes are stable.
    const std::string meta = nlohmann::json{{"image_id", e.image_id}, {"model_tag", e.model_tag}}.dump();
    const auto payload = sizeof(float) * static_cast<std::size_t>(e.patches.size());

    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + meta.size() + payload);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(kVersion);
    out.push_back(kDtypeFloat32);
    out.push_back(0);
    out.push_back(0);
    put_u32(out, static_cast<std::uint32_t>(e.patches.rows()));
    put_u32(out, static_cast<std::uint32_t>(e.patches.cols()));
    put_u32(out, static_cast<std::uint32_t>(meta.size()));
    out.insert(out.end(), meta.begin(), meta.end());
    const auto* raw = reinterpret_cast<const std::uint8_t*>(e.patches.data());
    out.insert(out.end(), raw, raw + payload);
    return out;
}

PatchEmbeddings decode_kemb(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw KembError(KembErrc::bad_magic, "missing KEMB signature");
    if (bytes.size() < kHeaderSize) throw KembError(KembErrc::truncated, "header shorter than 20 bytes");
    if (bytes[4] != kVersion)
        throw KembError(KembErrc::version_mismatch, "expected version 1, found " + std::to_string(bytes[4]));
    if (bytes[5] != kDtypeFloat32)
        throw KembError(KembErrc::unsupported_dtype, "dtype code " + std::to_string(bytes[5]));

    const std::uint64_t rows = get_u32(bytes.data() + 8);
    const std::uint64_t cols = get_u32(bytes.data() + 12);
    const std::uint64_t meta_len = get_u32(bytes.data() + 16);
    if (rows == 0 || cols == 0) throw KembError(KembErrc::shape_mismatch, "zero-sized shape in header");

    if (bytes.size() < kHeaderSize + meta_len) throw KembError(KembErrc::truncated, "metadata cut short");
    const std::uint64_t payload = rows * cols * sizeof(float);
    const std::uint64_t expected = kHeaderSize + meta_len + payload;
    if (bytes.size() < expected)
        throw KembError(KembErrc::truncated, "payload has " + std::to_string(bytes.size() - kHeaderSize - meta_len) +
                                                 " bytes, header implies " + std::to_string(payload));
    if (bytes.size() > expected)
        throw KembError(KembErrc::shape_mismatch, "trailing bytes after payload");

    PatchEmbeddings e;
    try {
        const auto meta = nlohmann::json::parse(bytes.begin() + kHeaderSize,
                                                bytes.begin() + static_cast<std::ptrdiff_t>(kHeaderSize + meta_len));
        e.image_id = meta.at("image_id").get<std::string>();
        e.model_tag = meta.at("model_tag").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
        throw KembError(KembErrc::bad_metadata, ex.what());
    }
    e.patches.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::memcpy(e.patches.data(), bytes.data() + kHeaderSize + meta_len, payload);
    validate_embeddings(e);
    return e;
}

void write_embeddings(const PatchEmbeddings& e, const std::filesystem::path& path) {
    const auto bytes = encode_kemb(e);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw KembError(KembErrc::io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw KembError(KembErrc::io, "write failed for " + path.string());
}

PatchEmbeddings read_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw KembError(KembErrc::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_kemb(bytes);
    } catch (const KembError& ex) {
        throw KembError(ex.code(), path.string() + ": " + ex.detail());
    }
}

ImageSetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path.string());
    ImageSetManifest m;
    try {
        const auto j = nlohmann::json::parse(in);
        m.set_id = j.at("set_id").get<std::string>();
        m.image_ids = j.at("image_ids").get<std::vector<std::string>>();
        m.notes = j.value("notes", "");
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error("malformed manifest " + path.string() + ": " + ex.what());
    }
    return m;
}

void write_manifest(const ImageSetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << nlohmann::json{{"set_id", m.set_id}, {"image_ids", m.image_ids}, {"notes", m.notes}}.dump(2) << '\n';
}

void MemoryStore::put(PatchEmbeddings e) {
    auto id = e.image_id;
    items_.insert_or_assign(std::move(id), std::move(e));
}

PatchEmbeddings MemoryStore::get(const std::string& image_id) const {
    auto it = items_.find(image_id);
    if (it == items_.end()) throw StackError("missing image_id '" + image_id + "'");
    return it->second;
}

DirectoryStore::DirectoryStore(std::filesystem::path root) : root_(std::move(root)) {
    if (!std::filesystem::is_directory(root_)) throw std::runtime_error("store not found: " + root_.string());
}

PatchEmbeddings DirectoryStore::get(const std::string& image_id) const {
    const auto path = root_ / (image_id + ".kemb");
    if (!std::filesystem::exists(path)) throw StackError("missing image_id '" + image_id + "'");
    auto e = read_embeddings(path);
    if (e.image_id != image_id)
        throw KembError(KembErrc::bad_metadata, path.string() + " declares image_id '" + e.image_id + "'");
    return e;
}

StackedSet stack_set(const ImageSetManifest& manifest, const EmbeddingStore& store) {
    if (manifest.image_ids.empty()) throw StackError("manifest '" + manifest.set_id + "' has no images");
    std::set<std::string> seen;
    for (const auto& id : manifest.image_ids)
        if (!seen.insert(id).second) throw StackError("duplicate image_id '" + id + "' in manifest '" + manifest.set_id + "'");

    std::vector<PatchEmbeddings> members;
    members.reserve(manifest.image_ids.size());
    Eigen::Index total_rows = 0;
    for (const auto& id : manifest.image_ids) {
        members.push_back(store.get(id));
        const auto& e = members.back();
        validate_embeddings(e);
        if (e.width() != members.front().width())
            throw StackError("inconsistent embedding dimension: '" + id + "' has D=" + std::to_string(e.width()) +
                             ", expected " + std::to_string(members.front().width()));
        if (e.model_tag != members.front().model_tag)
            throw StackError("inconsistent model_tag: '" + id + "' is '" + e.model_tag + "'");
        total_rows += e.patches.rows();
    }

    StackedSet out;
    out.set_id = manifest.set_id;
    out.model_tag = members.front().model_tag;
    out.points.resize(total_rows, members.front().width());
    out.row_provenance.reserve(static_cast<std::size_t>(total_rows));
    Eigen::Index row = 0;
    for (const auto& e : members) {
        out.points.middleRows(row, e.patches.rows()) = e.patches;
        for (int p = 0; p < e.num_patches(); ++p) out.row_provenance.push_back({e.image_id, p});
        row += e.patches.rows();
    }
    return out;
}

}  // namespace imgk
