#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dsi {

/// Stored token embeddings are 4-byte reals so that persistence is bit-exact.
using Embedding = Eigen::VectorXf;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr std::string_view kTokenPlaceholder = "{token}";
inline constexpr std::string_view kBaseShift = "base";

struct TokenProvenance {
    std::int64_t steps = 0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
    std::string backend_id;
    std::string created_at;  // ISO-8601 UTC, e.g. 2024-01-01T00:00:00Z

    bool operator==(const TokenProvenance&) const = default;
};

struct ClassToken {
    int class_id = 0;
    std::string class_label;
    std::string token_string;
    Embedding embedding;
    TokenProvenance provenance;

    bool operator==(const ClassToken& other) const {
        return class_id == other.class_id && class_label == other.class_label &&
               token_string == other.token_string && provenance == other.provenance &&
               embedding.size() == other.embedding.size() &&
               (embedding.array() == other.embedding.array()).all();
    }
};

/// "<" + slug + "-" + class_id + ">"; angle brackets never occur in
/// natural-language prompts, which keeps tokens out of the vocabulary.
std::string make_token_string(std::string_view dataset_slug, int class_id);
bool is_token_string(std::string_view text);

struct ShiftSpec {
    std::string name;
    std::string prompt_template;
    std::string caption_fragment;
    bool style_flag = false;
    std::optional<double> shift_threshold;

    bool is_base() const { return name == kBaseShift; }
    bool operator==(const ShiftSpec&) const = default;
};

/// Throws on a template without exactly one placeholder or a threshold outside [-1, 1].
void validate(const ShiftSpec& spec);

struct CaptionPair {
    std::string c_class;
    std::optional<std::string> c_shift;

    bool operator==(const CaptionPair&) const = default;
};

struct CounterfactualSample {
    std::string sample_id;
    std::string image_ref;  // empty for failed generations
    int class_id = 0;
    std::string shift_name;
    std::int64_t seed = 0;
    std::string prompt;
    std::optional<double> sim_class;
    std::optional<double> sim_shift;
    std::optional<bool> kept;
    std::optional<std::string> error;

    bool failed() const { return error.has_value(); }
    bool operator==(const CounterfactualSample&) const = default;
};

struct ClassThreshold {
    int class_id = 0;
    double value = 0.0;
    double percentile = 20.0;
    std::int64_t n_reference = 0;

    bool operator==(const ClassThreshold&) const = default;
};

struct YieldStats {
    std::int64_t total = 0;
    std::int64_t kept = 0;

    /// kept / total; empty when total is zero.
    std::optional<double> yield_fraction() const {
        if (total <= 0) return std::nullopt;
        return static_cast<double>(kept) / static_cast<double>(total);
    }
    bool operator==(const YieldStats&) const = default;
};

}  // namespace dsi
