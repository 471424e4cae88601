#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "imgk/embedding_io.hpp"
#include "imgk/matrix.hpp"

namespace imgk::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

inline PatchEmbeddings random_embeddings(const std::string& id, int p, int d, std::uint64_t seed,
                                         const std::string& tag = "test-model") {
    PatchEmbeddings e;
    e.image_id = id;
    e.model_tag = tag;
    e.patches = random_matrix(p, d, seed).cast<float>();
    return e;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("imgk-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

}  // namespace imgk::testing
