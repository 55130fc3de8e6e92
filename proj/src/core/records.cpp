#include "dsi/core/records.hpp"

#include <cmath>

#include "dsi/error.hpp"

namespace dsi {

namespace {

template <typename T>
void put_optional(nlohmann::json& j, const char* key, const std::optional<T>& value) {
    if (value) {
        j[key] = *value;
    } else {
        j[key] = nullptr;
    }
}

template <typename T>
std::optional<T> get_optional(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const CounterfactualSample& s) {
    j = nlohmann::json{
        {"sample_id", s.sample_id}, {"image_ref", s.image_ref}, {"class_id", s.class_id},
        {"shift_name", s.shift_name}, {"seed", s.seed},        {"prompt", s.prompt},
    };
    put_optional(j, "sim_class", s.sim_class);
    put_optional(j, "sim_shift", s.sim_shift);
    put_optional(j, "kept", s.kept);
    put_optional(j, "error", s.error);
}

void from_json(const nlohmann::json& j, CounterfactualSample& s) {
    s.sample_id = j.at("sample_id").get<std::string>();
    s.image_ref = j.value("image_ref", std::string{});
    s.class_id = j.at("class_id").get<int>();
    s.shift_name = j.at("shift_name").get<std::string>();
    s.seed = j.at("seed").get<std::int64_t>();
    s.prompt = j.at("prompt").get<std::string>();
    s.sim_class = get_optional<double>(j, "sim_class");
    s.sim_shift = get_optional<double>(j, "sim_shift");
    s.kept = get_optional<bool>(j, "kept");
    s.error = get_optional<std::string>(j, "error");
}

void to_json(nlohmann::json& j, const ClassThreshold& t) {
    j = nlohmann::json{{"class_id", t.class_id},
                       {"value", t.value},
                       {"percentile", t.percentile},
                       {"n_reference", t.n_reference}};
}

void from_json(const nlohmann::json& j, ClassThreshold& t) {
    t.class_id = j.at("class_id").get<int>();
    t.value = j.at("value").get<double>();
    t.percentile = j.at("percentile").get<double>();
    t.n_reference = j.at("n_reference").get<std::int64_t>();
}

void to_json(nlohmann::json& j, const YieldStats& y) {
    j = nlohmann::json{{"total", y.total}, {"kept", y.kept}};
    put_optional(j, "yield_fraction", y.yield_fraction());
}

void from_json(const nlohmann::json& j, YieldStats& y) {
    y.total = j.at("total").get<std::int64_t>();
    y.kept = j.at("kept").get<std::int64_t>();
}

void to_json(nlohmann::json& j, const ShiftSpec& s) {
    j = nlohmann::json{{"name", s.name},
                       {"prompt_template", s.prompt_template},
                       {"caption_fragment", s.caption_fragment},
                       {"style_flag", s.style_flag}};
    put_optional(j, "threshold", s.shift_threshold);
}

void from_json(const nlohmann::json& j, ShiftSpec& s) {
    s.name = j.at("name").get<std::string>();
    s.prompt_template = j.at("prompt_template").get<std::string>();
    s.caption_fragment = j.value("caption_fragment", std::string{});
    s.style_flag = j.value("style_flag", false);
    s.shift_threshold = get_optional<double>(j, "threshold");
}

void validate(const CounterfactualSample& sample) {
    auto in_range = [](const std::optional<double>& v) {
        return !v || (std::isfinite(*v) && *v >= -1.0 && *v <= 1.0);
    };
    if (!in_range(sample.sim_class) || !in_range(sample.sim_shift)) {
        fail(ErrorCode::InvalidArgument, "similarity of " + sample.sample_id + " outside [-1, 1]");
    }
    if (sample.kept) {
        const bool base = sample.shift_name == kBaseShift;
        if (!sample.sim_class || (!base && !sample.sim_shift)) {
            fail(ErrorCode::InvalidState, "sample " + sample.sample_id + " has a decision before its scores");
        }
    }
}

}  // namespace dsi
