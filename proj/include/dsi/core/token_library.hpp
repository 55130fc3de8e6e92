#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dsi/core/types.hpp"

namespace dsi {

inline constexpr int kTokenLibraryFormatVersion = 1;

/// Writes `manifest.json` plus one little-endian float32 `.emb` file per token
/// into `dir` and returns the SHA-256 of the manifest text. A directory that
/// already holds a manifest is never overwritten.
std::string save_token_library(const std::vector<ClassToken>& library, const std::filesystem::path& dir);

std::vector<ClassToken> load_token_library(const std::filesystem::path& dir);

/// Digest of the manifest file already on disk.
std::string token_library_digest(const std::filesystem::path& dir);

const ClassToken* find_token(const std::vector<ClassToken>& library, int class_id);

}  // namespace dsi
