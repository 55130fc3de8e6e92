#include "dsi/generation/generation.hpp"

#include <cstdio>

#include "dsi/core/parallel.hpp"
#include "dsi/core/token_library.hpp"
#include "dsi/error.hpp"

namespace dsi {

std::string render_prompt(const ShiftSpec& spec, const ClassToken& token) {
    const auto& tmpl = spec.prompt_template;
    const auto pos = tmpl.find(kTokenPlaceholder);
    if (pos == std::string::npos) {
        fail(ErrorCode::PlaceholderMissing, "template of shift '" + spec.name + "' has no {token}");
    }
    if (tmpl.find(kTokenPlaceholder, pos + kTokenPlaceholder.size()) != std::string::npos) {
        fail(ErrorCode::PlaceholderDuplicated, "template of shift '" + spec.name + "' repeats {token}");
    }
    return tmpl.substr(0, pos) + token.token_string + tmpl.substr(pos + kTokenPlaceholder.size());
}

std::string make_sample_id(int class_id, const std::string& shift_name, std::int64_t seed) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "-s%06lld", static_cast<long long>(seed));
    return "c" + std::to_string(class_id) + "-" + shift_name + buf;
}

void validate(const GenerationRequest& request, const ShiftRegistry& registry, const std::vector<ClassToken>& library) {
    if (request.n < 1) fail(ErrorCode::InvalidArgument, "n: must be >= 1");
    if (!registry.contains(request.shift_name)) {
        fail(ErrorCode::NotFound, "shift_name: unknown shift '" + request.shift_name + "'");
    }
    if (find_token(library, request.class_id) == nullptr) {
        fail(ErrorCode::NotFound, "class_id: no token for class " + std::to_string(request.class_id));
    }
}

std::vector<CounterfactualSample> generate_batch(const GenerationRequest& request, const ShiftRegistry& registry,
                                                 const std::vector<ClassToken>& library,
                                                 const GenerativeBackend& backend, ImageStore& store,
                                                 std::size_t parallelism) {
    validate(request, registry, library);
    const auto& spec = registry.at(request.shift_name);
    const auto& token = *find_token(library, request.class_id);
    if (!backend.has_token(token.token_string)) {
        fail(ErrorCode::InvalidState, "token " + token.token_string + " is not registered with " + backend.backend_id());
    }
    const std::string prompt = render_prompt(spec, token);

    std::vector<CounterfactualSample> samples(static_cast<std::size_t>(request.n));
    parallel_for(samples.size(), parallelism, [&](std::size_t i) {
        auto& sample = samples[i];
        sample.seed = request.base_seed + static_cast<std::int64_t>(i);
        sample.class_id = request.class_id;
        sample.shift_name = spec.name;
        sample.prompt = prompt;
        sample.sample_id = make_sample_id(request.class_id, spec.name, sample.seed);
        try {
            const Image image = backend.generate(prompt, sample.seed);
            sample.image_ref = store.put(spec.name + "/" + std::to_string(request.class_id) + "/" + sample.sample_id, image);
        } catch (const std::exception& e) {
            sample.image_ref.clear();
            sample.error = e.what();
        }
    });

    const bool any_ok = std::any_of(samples.begin(), samples.end(), [](const auto& s) { return !s.failed(); });
    if (!any_ok) {
        fail(ErrorCode::AllSamplesFailed, "all " + std::to_string(request.n) + " generations failed for class " +
                                              std::to_string(request.class_id) + ", shift '" + spec.name +
                                              "': " + samples.front().error.value_or(""));
    }
    return samples;
}

}  // namespace dsi
