#include "dsi/core/shift_registry.hpp"

#include <fstream>
#include <optional>
#include <unordered_set>

#include <json.hpp>

#include "dsi/core/fs_util.hpp"
#include "dsi/error.hpp"

namespace dsi {

ShiftRegistry::ShiftRegistry(std::vector<ShiftSpec> entries) : entries_(std::move(entries)) {
    std::unordered_set<std::string> seen;
    for (const auto& spec : entries_) {
        validate(spec);
        if (!seen.insert(spec.name).second) {
            fail(ErrorCode::DuplicateShift, "duplicate shift name '" + spec.name + "'");
        }
    }
}

const ShiftSpec* ShiftRegistry::find(std::string_view name) const {
    for (const auto& spec : entries_) {
        if (spec.name == name) return &spec;
    }
    return nullptr;
}

const ShiftSpec& ShiftRegistry::at(std::string_view name) const {
    const auto* spec = find(name);
    if (spec == nullptr) fail(ErrorCode::NotFound, "unknown shift '" + std::string(name) + "'");
    return *spec;
}

ShiftRegistry ShiftRegistry::with_threshold(std::string_view name, double threshold) const {
    auto entries = entries_;
    bool found = false;
    for (auto& spec : entries) {
        if (spec.name == name) {
            spec.shift_threshold = threshold;
            found = true;
        }
    }
    if (!found) fail(ErrorCode::NotFound, "unknown shift '" + std::string(name) + "'");
    return ShiftRegistry(std::move(entries));
}

ShiftRegistry ShiftRegistry::with_entry(ShiftSpec spec) const {
    auto entries = entries_;
    entries.push_back(std::move(spec));
    return ShiftRegistry(std::move(entries));
}

ShiftRegistry default_shift_registry() {
    auto photo = [](std::string name, std::string tmpl, std::string fragment, double threshold) {
        return ShiftSpec{std::move(name), std::move(tmpl), std::move(fragment), false, threshold};
    };
    auto style = [](std::string name, std::string tmpl, std::string fragment, double threshold) {
        return ShiftSpec{std::move(name), std::move(tmpl), std::move(fragment), true, threshold};
    };
    // Templates are kept verbatim, including "in the road", "a orange" and "panting".
    return ShiftRegistry({
        ShiftSpec{"base", "A photo of a {token}", "", false, std::nullopt},
        photo("in_the_grass", "A photo of a {token} in the grass", "in the grass", 0.127),
        photo("in_the_beach", "A photo of a {token} in the beach", "in the beach", 0.175),
        photo("in_the_forest", "A photo of a {token} in the forest", "in the forest", 0.153),
        photo("in_the_water", "A photo of a {token} in the water", "in the water", 0.163),
        photo("on_the_road", "A photo of a {token} in the road", "on the road", 0.154),
        photo("on_the_rocks", "A photo of a {token} in the rocks", "on the rocks", 0.124),
        photo("in_the_snow", "A photo of a {token} in the snow", "in the snow", 0.160),
        photo("in_the_rain", "A photo of a {token} in the rain", "in the rain", 0.173),
        photo("in_the_fog", "A photo of a {token} in the fog", "in the fog", 0.152),
        photo("in_bright_sunlight", "A photo of a {token} in bright sunlight", "in bright sunlight", 0.124),
        photo("at_dusk", "A photo of a {token} at dusk", "at dusk", 0.158),
        photo("at_night", "A photo of a {token} at night", "at night", 0.147),
        photo("studio_lighting", "A photo of a {token} in studio lighting", "studio lighting", 0.140),
        photo("blue", "A photo of a blue {token}", "blue", 0.163),
        photo("green", "A photo of a green {token}", "green", 0.190),
        photo("red", "A photo of a red {token}", "red", 0.167),
        photo("yellow", "A photo of a yellow {token}", "yellow", 0.212),
        photo("orange", "A photo of a orange {token}", "orange", 0.216),
        photo("person_and_a", "A photo of a person and a {token}", "person and a", 0.181),
        photo("and_a_flower", "A photo of a {token} and a flower", "and a flower", 0.148),
        style("oil_painting", "An oil panting of a {token}", "an oil painting", 0.214),
        style("pencil_sketch", "A black and white pencil sketch of a {token}",
              "a black and white pencil sketch", 0.223),
        style("embroidery", "An embroidery of a {token}", "an embroidery", 0.259),
    });
}

nlohmann::json to_json(const ShiftRegistry& registry) {
    auto doc = nlohmann::json::array();
    for (const auto& spec : registry.entries()) {
        nlohmann::json entry = {
            {"name", spec.name},
            {"prompt_template", spec.prompt_template},
            {"caption_fragment", spec.caption_fragment},
            {"style_flag", spec.style_flag},
            {"threshold", nullptr},
        };
        if (spec.shift_threshold) entry["threshold"] = *spec.shift_threshold;
        doc.push_back(std::move(entry));
    }
    return doc;
}

ShiftRegistry shift_registry_from_json(const nlohmann::json& doc) {
    if (!doc.is_array()) fail(ErrorCode::ManifestMalformed, "shift registry must be a JSON array");
    std::vector<ShiftSpec> entries;
    try {
        for (const auto& item : doc) {
            ShiftSpec spec;
            spec.name = item.at("name").get<std::string>();
            spec.prompt_template = item.at("prompt_template").get<std::string>();
            spec.caption_fragment = item.value("caption_fragment", std::string{});
            spec.style_flag = item.value("style_flag", false);
            if (item.contains("threshold") && !item.at("threshold").is_null()) {
                spec.shift_threshold = item.at("threshold").get<double>();
            }
            entries.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ManifestMalformed, std::string("malformed shift registry: ") + e.what());
    }
    return ShiftRegistry(std::move(entries));
}

ShiftRegistry load_shift_registry(const std::filesystem::path& path) {
    return shift_registry_from_json(read_json_file(path));
}

void save_shift_registry(const ShiftRegistry& registry, const std::filesystem::path& path) {
    write_file_atomic(path, to_json(registry).dump(2) + "\n");
}

}  // namespace dsi
