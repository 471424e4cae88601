#include <doctest.h>

#include <cstring>
#include <fstream>

#include "helpers.hpp"
#include "imgk/embedding_io.hpp"

using namespace imgk;
using imgk::testing::random_embeddings;
using imgk::testing::TempDir;

namespace {

KembErrc decode_error(const std::vector<std::uint8_t>& bytes) {
    try {
        decode_kemb(bytes);
    } catch (const KembError& e) {
        return e.code();
    }
    FAIL("decode did not throw");
    return KembErrc::io;
}

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

TEST_SUITE("embedding_io") {

TEST_CASE("reference-shaped round trip is bitwise") {
    auto e = random_embeddings("img_001", kReferencePatches, kReferenceWidth, 11, kReferenceModelTag);
    e.patches(0, 0) = -0.0f;
    e.patches(1, 1) = std::numeric_limits<float>::denorm_min();
    TempDir dir("kemb");
    write_embeddings(e, dir / "img_001.kemb");
    const auto back = read_embeddings(dir / "img_001.kemb");
    CHECK(back == e);
    CHECK(back.num_patches() == 196);
    CHECK(back.width() == 1024);
    CHECK(std::signbit(back.patches(0, 0)));
}

TEST_CASE("header layout") {
    const auto e = random_embeddings("a", 3, 5, 1, "tag");
    const auto b = encode_kemb(e);
    CHECK(std::memcmp(b.data(), "KEMB", 4) == 0);
    CHECK(b[4] == 1);
    CHECK(b[5] == 1);
    CHECK(b[6] == 0);
    CHECK(b[7] == 0);
    CHECK(b[8] == 3);
    CHECK(b[12] == 5);
    std::uint32_t j = 0;
    std::memcpy(&j, b.data() + 16, 4);
    CHECK(b.size() == 20 + j + 3 * 5 * 4);
    float first = 0;
    std::memcpy(&first, b.data() + 20 + j, 4);
    CHECK(first == e.patches(0, 0));
}

TEST_CASE("decoder error codes") {
    const auto good = encode_kemb(random_embeddings("a", 4, 3, 2));

    auto b = good;
    b[0] = 'X';
    CHECK(decode_error(b) == KembErrc::bad_magic);

    b = good;
    b[4] = 2;
    CHECK(decode_error(b) == KembErrc::version_mismatch);

    b = good;
    b[5] = 2;
    CHECK(decode_error(b) == KembErrc::unsupported_dtype);

    b = good;
    b.resize(b.size() - 1);
    CHECK(decode_error(b) == KembErrc::truncated);

    b = good;
    b.resize(10);
    CHECK(decode_error(b) == KembErrc::truncated);

    b = good;
    b.push_back(0);
    CHECK(decode_error(b) == KembErrc::shape_mismatch);

    b = good;
    put_u32(b, 8, 5);  // claims one more row than present
    CHECK(decode_error(b) == KembErrc::truncated);

    b = good;
    b[21] = '#';  // inside the metadata JSON
    CHECK(decode_error(b) == KembErrc::bad_metadata);
}

TEST_CASE("non-finite values are rejected on write") {
    auto e = random_embeddings("a", 2, 2, 3);
    e.patches(1, 0) = std::numeric_limits<float>::quiet_NaN();
    try {
        encode_kemb(e);
        FAIL("expected KembError");
    } catch (const KembError& err) {
        CHECK(err.code() == KembErrc::validation);
    }
    e.patches(1, 0) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(encode_kemb(e), KembError);
}

TEST_CASE("reference tag pins the shape") {
    auto e = random_embeddings("a", 196, 768, 9, kReferenceModelTag);
    try {
        validate_embeddings(e);
        FAIL("expected KembError");
    } catch (const KembError& err) {
        CHECK(err.code() == KembErrc::shape_mismatch);
    }
}

TEST_CASE("empty ids and shapes are rejected") {
    auto e = random_embeddings("", 2, 2, 4);
    CHECK_THROWS_AS(validate_embeddings(e), KembError);
    e = random_embeddings("a", 0, 2, 4);
    CHECK_THROWS_AS(validate_embeddings(e), KembError);
}

TEST_CASE("read errors name the file") {
    TempDir dir("kemb-missing");
    try {
        read_embeddings(dir / "nope.kemb");
        FAIL("expected KembError");
    } catch (const KembError& e) {
        CHECK(e.code() == KembErrc::io);
        CHECK(std::string(e.what()).find("nope.kemb") != std::string::npos);
    }
}

TEST_CASE("manifest round trip") {
    TempDir dir("manifest");
    ImageSetManifest m{"set_7", {"a", "b", "c"}, "three images"};
    write_manifest(m, dir / "set_7.json");
    const auto back = read_manifest(dir / "set_7.json");
    CHECK(back.set_id == m.set_id);
    CHECK(back.image_ids == m.image_ids);
    CHECK(back.notes == m.notes);
}

TEST_CASE("stack_set concatenates in manifest order with provenance") {
    MemoryStore store;
    store.put(random_embeddings("a", 3, 4, 5));
    store.put(random_embeddings("b", 2, 4, 6));
    const auto s = stack_set({"s", {"b", "a"}, ""}, store);
    REQUIRE(s.points.rows() == 5);
    CHECK(s.points.row(0) == store.get("b").patches.row(0));
    CHECK(s.points.row(2) == store.get("a").patches.row(0));
    CHECK(s.row_provenance[1].image_id == "b");
    CHECK(s.row_provenance[1].patch_index == 1);
    CHECK(s.row_provenance[4].image_id == "a");
    CHECK(s.row_provenance[4].patch_index == 2);
    CHECK(s.model_tag == "test-model");
}

TEST_CASE("stack_set rejects inconsistent inputs") {
    MemoryStore store;
    store.put(random_embeddings("a", 3, 4, 5));
    store.put(random_embeddings("w", 3, 5, 6));
    store.put(random_embeddings("t", 3, 4, 7, "other-model"));
    CHECK_THROWS_WITH_AS(stack_set({"s", {"a", "w"}, ""}, store), doctest::Contains("inconsistent embedding dimension"),
                         StackError);
    CHECK_THROWS_AS(stack_set({"s", {"a", "t"}, ""}, store), StackError);
    CHECK_THROWS_AS(stack_set({"s", {}, ""}, store), StackError);
    CHECK_THROWS_AS(stack_set({"s", {"a", "a"}, ""}, store), StackError);
    CHECK_THROWS_AS(stack_set({"s", {"missing"}, ""}, store), StackError);
}

TEST_CASE("directory store") {
    TempDir dir("store");
    const auto e = random_embeddings("x1", 4, 3, 8);
    write_embeddings(e, dir / "x1.kemb");
    const DirectoryStore store(dir.path());
    CHECK(store.get("x1") == e);
    CHECK_THROWS(store.get("x2"));
    CHECK_THROWS_WITH(DirectoryStore(dir / "absent"), doctest::Contains("store not found"));
}

}
