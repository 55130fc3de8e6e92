#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dsi/backends/contracts.hpp"
#include "dsi/core/types.hpp"
#include "dsi/error.hpp"
#include "dsi/generation/image_store.hpp"

namespace dsi {

/// c_class = "a photo of a <label>" ("a <label>" for art styles);
/// c_shift = "a photo <fragment>" (the fragment itself for art styles);
/// no c_shift for the base shift.
CaptionPair build_captions(const std::string& class_label, const ShiftSpec& spec);

/// Dot product of two unit vectors, clamped to [-1, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
    using Scalar = typename DerivedA::Scalar;
    if (u.size() != v.size()) {
        fail(ErrorCode::DimensionMismatch,
             "cosine_similarity of vectors of length " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
    }
    constexpr Scalar kNormTolerance = Scalar(1e-6);
    if (std::abs(u.norm() - Scalar(1)) > kNormTolerance || std::abs(v.norm() - Scalar(1)) > kNormTolerance) {
        fail(ErrorCode::InvalidArgument, "cosine_similarity expects unit vectors");
    }
    return std::clamp(u.dot(v), Scalar(-1), Scalar(1));
}

/// Sorted ascending, the element at 1-indexed rank ceil(p/100 * n); p in (0, 100].
double nearest_rank_percentile(std::span<const double> values, double p);

/// Sets sim_class (and sim_shift unless base) on every generated sample.
/// Caption embeddings are computed once. Samples whose image cannot be read
/// are marked failed.
std::vector<CounterfactualSample> score_batch(std::vector<CounterfactualSample> samples, const std::string& class_label,
                                              const ShiftSpec& spec, const EmbeddingBackend& backend,
                                              const ImageStore& store);

/// 20th-percentile (by default) similarity of the class's reference images to c_class.
ClassThreshold calibrate_class_threshold(int class_id, std::span<const Image> reference_images,
                                         const std::string& class_label, const EmbeddingBackend& backend,
                                         double percentile = 20.0);

struct FilterDecision {
    std::string sample_id;
    double sim_class = 0.0;
    std::optional<double> sim_shift;
    double tau_class = 0.0;
    std::optional<double> tau_shift;
    bool kept = false;

    bool operator==(const FilterDecision&) const = default;
};

/// kept = sim_class >= tau_class && (no tau_shift || sim_shift >= tau_shift).
bool passes(double sim_class, std::optional<double> sim_shift, double tau_class, std::optional<double> tau_shift);

struct FilterResult {
    std::vector<CounterfactualSample> samples;  // every input sample, `kept` set on the scored ones
    std::vector<CounterfactualSample> kept;
    std::vector<FilterDecision> decisions;
    YieldStats yield;
};

/// Failed generations get no decision but count in yield.total.
FilterResult filter_batch(const std::vector<CounterfactualSample>& samples, const ClassThreshold& tau_class,
                          const ShiftSpec& spec);

/// (x, fraction of scores <= x) for each x of the grid.
std::vector<std::pair<double, double>> similarity_cdf(std::span<const double> scores, std::span<const double> grid);

}  // namespace dsi
