#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dsi/core/types.hpp"

namespace dsi {

/// Immutable, name-unique collection of shifts. Edits return a new registry.
class ShiftRegistry {
public:
    ShiftRegistry() = default;
    explicit ShiftRegistry(std::vector<ShiftSpec> entries);

    const std::vector<ShiftSpec>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    const ShiftSpec* find(std::string_view name) const;
    const ShiftSpec& at(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }

    ShiftRegistry with_threshold(std::string_view name, double threshold) const;
    ShiftRegistry with_entry(ShiftSpec spec) const;

    bool operator==(const ShiftRegistry&) const = default;

private:
    std::vector<ShiftSpec> entries_;
};

/// The base prompt plus the 23 benchmark shifts with their filtering thresholds.
ShiftRegistry default_shift_registry();

nlohmann::json to_json(const ShiftRegistry& registry);
ShiftRegistry shift_registry_from_json(const nlohmann::json& doc);

ShiftRegistry load_shift_registry(const std::filesystem::path& path);
void save_shift_registry(const ShiftRegistry& registry, const std::filesystem::path& path);

}  // namespace dsi
