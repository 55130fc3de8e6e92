#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsi/backends/contracts.hpp"
#include "dsi/core/shift_registry.hpp"
#include "dsi/core/types.hpp"
#include "dsi/generation/image_store.hpp"

namespace dsi {

struct GenerationRequest {
    int class_id = 0;
    std::string shift_name;
    std::int64_t n = 1;
    std::int64_t base_seed = 0;
};

/// Replaces the single "{token}" of the template with the token string.
std::string render_prompt(const ShiftSpec& spec, const ClassToken& token);

/// "c<class>-<shift>-s<seed>", unique per (class, shift, seed).
std::string make_sample_id(int class_id, const std::string& shift_name, std::int64_t seed);

/// Checks the request against registry and library; throws with the offending field named.
void validate(const GenerationRequest& request, const ShiftRegistry& registry, const std::vector<ClassToken>& library);

/// Sample i uses seed base_seed + i. A backend failure marks that sample
/// failed (error set, no image) and the batch continues; if every sample
/// fails the batch raises AllSamplesFailed. Output is ordered by seed.
std::vector<CounterfactualSample> generate_batch(const GenerationRequest& request, const ShiftRegistry& registry,
                                                 const std::vector<ClassToken>& library,
                                                 const GenerativeBackend& backend, ImageStore& store,
                                                 std::size_t parallelism = 1);

}  // namespace dsi
