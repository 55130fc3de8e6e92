#include <fstream>

#include <gtest/gtest.h>

#include "dsi/core/fs_util.hpp"
#include "dsi/core/random.hpp"
#include "dsi/core/token_library.hpp"
#include "test_util.hpp"

using namespace dsi;
namespace fs = std::filesystem;

namespace {

std::vector<ClassToken> random_library(std::uint64_t seed, int n, int dim) {
    SplitMix64 rng(seed);
    std::vector<ClassToken> library;
    for (int i = 0; i < n; ++i) {
        ClassToken t;
        t.class_id = i * 3 + 1;
        t.class_label = "class " + std::to_string(t.class_id);
        t.token_string = make_token_string("class", t.class_id);
        t.embedding = Embedding(dim);
        for (int d = 0; d < dim; ++d) t.embedding[d] = static_cast<float>(rng.normal());
        t.provenance = TokenProvenance{3000, 5e-4, seed, "toy-generative-v1", "2024-01-01T00:00:00Z"};
        library.push_back(t);
    }
    return library;
}

ErrorCode load_error(const fs::path& dir) {
    try {
        load_token_library(dir);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "load succeeded";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(TokenLibrary, EmptyLibraryHasDigest) {
    test::TempDir dir;
    const auto digest = save_token_library({}, dir / "lib");
    EXPECT_EQ(digest.size(), 64u);
    EXPECT_EQ(digest, token_library_digest(dir / "lib"));
    EXPECT_TRUE(load_token_library(dir / "lib").empty());
}

TEST(TokenLibrary, FileSizeIsFourBytesPerComponent) {
    test::TempDir dir;
    save_token_library(random_library(1, 2, 768), dir / "lib");
    int n_files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "lib")) {
        if (entry.path().extension() == ".emb") {
            EXPECT_EQ(fs::file_size(entry.path()), 768u * 4u);
            ++n_files;
        }
    }
    EXPECT_EQ(n_files, 2);
}

TEST(TokenLibrary, LittleEndianFloat32) {
    test::TempDir dir;
    auto library = random_library(1, 1, 2);
    library[0].embedding << 1.0f, -2.5f;
    save_token_library(library, dir / "lib");
    const auto bytes = read_binary_file(dir / "lib" / "token_00000.emb");
    // 1.0f = 0x3F800000, -2.5f = 0xC0200000
    const std::vector<std::uint8_t> expected = {0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x20, 0xC0};
    EXPECT_EQ(bytes, expected);
}

TEST(TokenLibrary, ManifestFields) {
    test::TempDir dir;
    save_token_library(random_library(2, 1, 4), dir / "lib");
    const auto manifest = read_json_file(dir / "lib" / "manifest.json");
    EXPECT_EQ(manifest.at("format_version"), 1);
    EXPECT_EQ(manifest.at("backend_id"), "toy-generative-v1");
    EXPECT_EQ(manifest.at("embedding_dim"), 4);
    const auto& entry = manifest.at("entries").at(0);
    for (const char* key : {"class_id", "class_label", "token_string", "file", "steps", "learning_rate", "seed", "created_at"}) {
        EXPECT_TRUE(entry.contains(key)) << key;
    }
}

TEST(TokenLibrary, RoundTripIsBitExact) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        test::TempDir dir;
        const auto library = random_library(seed, 5, 17);
        save_token_library(library, dir / "lib");
        EXPECT_EQ(load_token_library(dir / "lib"), library);
    }
}

TEST(TokenLibrary, RejectsDuplicateTokenString) {
    test::TempDir dir;
    auto library = random_library(1, 2, 4);
    library[1].token_string = library[0].token_string;
    EXPECT_DSI_ERROR(save_token_library(library, dir / "lib"), ErrorCode::DuplicateToken);
}

TEST(TokenLibrary, RejectsMixedDimensions) {
    test::TempDir dir;
    auto library = random_library(1, 2, 4);
    library[1].embedding = Embedding::Zero(5);
    EXPECT_DSI_ERROR(save_token_library(library, dir / "lib"), ErrorCode::DimensionMismatch);
}

TEST(TokenLibrary, RejectsNonFinite) {
    test::TempDir dir;
    auto library = random_library(1, 1, 4);
    library[0].embedding[2] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_THROW(save_token_library(library, dir / "lib"), Error);
}

TEST(TokenLibrary, NeverOverwrites) {
    test::TempDir dir;
    save_token_library(random_library(1, 1, 4), dir / "lib");
    EXPECT_THROW(save_token_library(random_library(2, 1, 4), dir / "lib"), Error);
    EXPECT_EQ(load_token_library(dir / "lib"), random_library(1, 1, 4));
}

TEST(TokenLibrary, ErrorCategories) {
    test::TempDir dir;
    fs::create_directories(dir / "empty");
    EXPECT_EQ(load_error(dir / "empty"), ErrorCode::ManifestMissing);

    save_token_library(random_library(1, 1, 768), dir / "truncated");
    write_file_atomic(dir / "truncated" / "token_00000.emb", std::string_view("abcd"));
    EXPECT_EQ(load_error(dir / "truncated"), ErrorCode::EmbeddingTruncated);

    save_token_library(random_library(1, 1, 8), dir / "oversized");
    write_file_atomic(dir / "oversized" / "token_00000.emb", std::string(64, '\0'));
    EXPECT_EQ(load_error(dir / "oversized"), ErrorCode::DimensionMismatch);

    save_token_library(random_library(1, 1, 8), dir / "missing");
    fs::remove(dir / "missing" / "token_00000.emb");
    EXPECT_EQ(load_error(dir / "missing"), ErrorCode::EmbeddingFileMissing);

    fs::create_directories(dir / "garbled");
    write_file_atomic(dir / "garbled" / "manifest.json", std::string_view("{not json"));
    EXPECT_EQ(load_error(dir / "garbled"), ErrorCode::ManifestMalformed);

    fs::create_directories(dir / "fields");
    write_file_atomic(dir / "fields" / "manifest.json", std::string_view(R"({"format_version": 1})"));
    EXPECT_EQ(load_error(dir / "fields"), ErrorCode::ManifestMalformed);

    fs::create_directories(dir / "version");
    write_file_atomic(dir / "version" / "manifest.json",
                      std::string_view(R"({"format_version": 9, "backend_id": "x", "embedding_dim": 1, "entries": []})"));
    EXPECT_EQ(load_error(dir / "version"), ErrorCode::ManifestMalformed);
}

TEST(TokenLibrary, FindToken) {
    const auto library = random_library(1, 3, 2);
    EXPECT_EQ(find_token(library, 4), &library[1]);
    EXPECT_EQ(find_token(library, 5), nullptr);
}
