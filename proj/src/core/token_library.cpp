#include "dsi/core/token_library.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include <json.hpp>

#include "dsi/core/fs_util.hpp"
#include "dsi/error.hpp"

namespace dsi {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestName = "manifest.json";

std::vector<std::uint8_t> encode_le_f32(const Embedding& embedding) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(embedding.size()) * 4);
    for (Eigen::Index i = 0; i < embedding.size(); ++i) {
        auto bits = std::bit_cast<std::uint32_t>(embedding[i]);
        for (int b = 0; b < 4; ++b) bytes[static_cast<std::size_t>(i) * 4 + b] = (bits >> (8 * b)) & 0xFF;
    }
    return bytes;
}

Embedding decode_le_f32(const std::vector<std::uint8_t>& bytes, Eigen::Index dim) {
    Embedding embedding(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes[static_cast<std::size_t>(i) * 4 + b]} << (8 * b);
        embedding[i] = std::bit_cast<float>(bits);
    }
    return embedding;
}

std::string embedding_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "token_%05zu.emb", index);
    return buf;
}

}  // namespace

std::string save_token_library(const std::vector<ClassToken>& library, const fs::path& dir) {
    if (fs::exists(dir / kManifestName)) {
        fail(ErrorCode::InvalidState, "token library already exists at " + dir.string());
    }
    const std::string backend_id = library.empty() ? std::string{} : library.front().provenance.backend_id;
    const Eigen::Index dim = library.empty() ? 0 : library.front().embedding.size();

    std::unordered_set<std::string> seen;
    for (const auto& token : library) {
        if (token.embedding.size() != dim) {
            fail(ErrorCode::DimensionMismatch,
                 "token " + token.token_string + " has dimension " + std::to_string(token.embedding.size()) +
                     ", expected " + std::to_string(dim));
        }
        if (token.provenance.backend_id != backend_id) {
            fail(ErrorCode::InvalidArgument, "token " + token.token_string + " comes from a different backend");
        }
        if (!token.embedding.allFinite()) {
            fail(ErrorCode::NonFinite, "token " + token.token_string + " has non-finite components");
        }
        if (!is_token_string(token.token_string)) {
            fail(ErrorCode::InvalidArgument, "'" + token.token_string + "' is not a reserved token string");
        }
        if (!seen.insert(token.token_string).second) {
            fail(ErrorCode::DuplicateToken, "duplicate token string " + token.token_string);
        }
    }

    fs::create_directories(dir);
    auto entries = nlohmann::json::array();
    for (std::size_t i = 0; i < library.size(); ++i) {
        const auto& token = library[i];
        const auto file = embedding_file_name(i);
        write_file_atomic(dir / file, encode_le_f32(token.embedding));
        entries.push_back({
            {"class_id", token.class_id},
            {"class_label", token.class_label},
            {"token_string", token.token_string},
            {"file", file},
            {"steps", token.provenance.steps},
            {"learning_rate", token.provenance.learning_rate},
            {"seed", token.provenance.seed},
            {"created_at", token.provenance.created_at},
        });
    }
    const nlohmann::json manifest = {
        {"format_version", kTokenLibraryFormatVersion},
        {"backend_id", backend_id},
        {"embedding_dim", dim},
        {"entries", std::move(entries)},
    };
    const auto text = manifest.dump(2) + "\n";
    write_file_atomic(dir / kManifestName, text);
    return sha256_hex(text);
}

std::string token_library_digest(const fs::path& dir) {
    if (!fs::exists(dir / kManifestName)) {
        fail(ErrorCode::ManifestMissing, "no manifest.json in " + dir.string());
    }
    return sha256_hex(read_text_file(dir / kManifestName));
}

std::vector<ClassToken> load_token_library(const fs::path& dir) {
    const auto manifest_path = dir / kManifestName;
    if (!fs::exists(manifest_path)) fail(ErrorCode::ManifestMissing, "no manifest.json in " + dir.string());
    const auto manifest = read_json_file(manifest_path);

    std::vector<ClassToken> library;
    std::unordered_set<std::string> seen;
    try {
        if (manifest.at("format_version").get<int>() != kTokenLibraryFormatVersion) {
            fail(ErrorCode::ManifestMalformed, "unsupported token library format_version");
        }
        const auto backend_id = manifest.at("backend_id").get<std::string>();
        const auto dim = manifest.at("embedding_dim").get<Eigen::Index>();
        if (dim < 0) fail(ErrorCode::ManifestMalformed, "negative embedding_dim");
        const auto expected_bytes = static_cast<std::uintmax_t>(dim) * 4;

        for (const auto& entry : manifest.at("entries")) {
            ClassToken token;
            token.class_id = entry.at("class_id").get<int>();
            token.class_label = entry.at("class_label").get<std::string>();
            token.token_string = entry.at("token_string").get<std::string>();
            token.provenance.steps = entry.at("steps").get<std::int64_t>();
            token.provenance.learning_rate = entry.at("learning_rate").get<double>();
            token.provenance.seed = entry.at("seed").get<std::uint64_t>();
            token.provenance.created_at = entry.at("created_at").get<std::string>();
            token.provenance.backend_id = backend_id;
            if (!seen.insert(token.token_string).second) {
                fail(ErrorCode::DuplicateToken, "duplicate token string " + token.token_string);
            }

            const auto file = dir / entry.at("file").get<std::string>();
            if (!fs::exists(file)) fail(ErrorCode::EmbeddingFileMissing, "missing embedding file " + file.string());
            const auto size = fs::file_size(file);
            if (size < expected_bytes) {
                fail(ErrorCode::EmbeddingTruncated, file.string() + " holds " + std::to_string(size) +
                                                        " bytes, manifest declares " + std::to_string(expected_bytes));
            }
            if (size > expected_bytes) {
                fail(ErrorCode::DimensionMismatch, file.string() + " holds " + std::to_string(size) +
                                                       " bytes, manifest declares " + std::to_string(expected_bytes));
            }
            token.embedding = decode_le_f32(read_binary_file(file), dim);
            library.push_back(std::move(token));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ManifestMalformed, manifest_path.string() + ": " + e.what());
    }
    return library;
}

const ClassToken* find_token(const std::vector<ClassToken>& library, int class_id) {
    const auto it = std::find_if(library.begin(), library.end(),
                                 [&](const ClassToken& t) { return t.class_id == class_id; });
    return it == library.end() ? nullptr : &*it;
}

}  // namespace dsi
