#pragma once

#include <string>
#include <vector>

#include "dsi/backends/contracts.hpp"

namespace dsi {

struct ConformanceCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ConformanceReport {
    std::string backend_id;
    std::vector<ConformanceCheck> checks;

    bool passed() const;
    std::string summary() const;
};

/// Contract checks that any generative backend must pass: declared dimensions,
/// determinism (skipped when the backend declares itself stochastic),
/// finite non-negative loss and finite gradient of the declared length.
/// Registers a probe token "<conformance-0>".
ConformanceReport check_generative_backend(GenerativeBackend& backend, std::uint64_t seed = 0);

/// Unit norm within 1e-6, declared dimension, determinism.
ConformanceReport check_embedding_backend(const EmbeddingBackend& backend, std::uint64_t seed = 0);

}  // namespace dsi
