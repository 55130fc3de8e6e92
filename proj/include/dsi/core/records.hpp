#pragma once

#include <json.hpp>

#include "dsi/core/types.hpp"

namespace dsi {

// JSON forms of the record types that travel through sidecars, JSON-lines
// audit files and the HTTP API.
void to_json(nlohmann::json& j, const CounterfactualSample& s);
void from_json(const nlohmann::json& j, CounterfactualSample& s);

void to_json(nlohmann::json& j, const ClassThreshold& t);
void from_json(const nlohmann::json& j, ClassThreshold& t);

void to_json(nlohmann::json& j, const YieldStats& y);
void from_json(const nlohmann::json& j, YieldStats& y);

void to_json(nlohmann::json& j, const ShiftSpec& s);
void from_json(const nlohmann::json& j, ShiftSpec& s);

/// Validates the record invariants (score ranges, kept-after-scores ordering).
void validate(const CounterfactualSample& sample);

}  // namespace dsi
