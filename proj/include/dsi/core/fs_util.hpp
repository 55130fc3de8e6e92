#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dsi {

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over the target, so a reader
/// never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> contents);

void append_line(const std::filesystem::path& path, std::string_view line);

std::string sha256_hex(std::string_view data);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ". Honors SOURCE_DATE_EPOCH.
std::string utc_timestamp_now();
std::string utc_timestamp(std::int64_t unix_seconds);

std::vector<std::string> split(std::string_view text, char delimiter);

}  // namespace dsi
