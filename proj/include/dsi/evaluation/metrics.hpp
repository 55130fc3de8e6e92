#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dsi/core/types.hpp"
#include "dsi/error.hpp"

namespace dsi {

struct PredictionEntry {
    std::string sample_id;
    int true_class = 0;
    int predicted_class = 0;

    bool operator==(const PredictionEntry&) const = default;
};

struct PredictionSet {
    std::string model_id;
    std::vector<PredictionEntry> entries;

    bool operator==(const PredictionSet&) const = default;
};

/// Throws on duplicate sample ids.
void validate(const PredictionSet& predictions);

struct SampleStatus {
    int class_id = 0;
    bool kept = false;
};
using KeptIndex = std::map<std::string, SampleStatus>;

/// Index over filtered samples; failed or undecided samples count as not kept.
KeptIndex make_kept_index(const std::vector<CounterfactualSample>& samples);

inline constexpr int kDefaultMinCount = 5;

struct PerClassAccuracy {
    std::map<int, double> accuracy;
    std::vector<int> excluded;  // classes with fewer than min_count kept samples
};

PerClassAccuracy per_class_accuracy(const PredictionSet& predictions, const KeptIndex& index,
                                    int min_count = kDefaultMinCount);

struct ModelEvaluation {
    std::string model_id;
    std::string shift_name;
    std::set<int> eligible_classes;
    std::map<int, double> per_class_accuracy;
    double shift_accuracy = 0.0;
    double base_accuracy_same_classes = 0.0;
    double drop = 0.0;
};

/// Eligibility is decided on the shift set; base accuracy is the mean
/// per-class base accuracy over exactly the eligible classes.
ModelEvaluation evaluate_model(const std::string& shift_name, const PredictionSet& shift_predictions,
                               const KeptIndex& shift_index, const PredictionSet& base_predictions,
                               const KeptIndex& base_index, int min_count = kDefaultMinCount);

/// Mean accuracy drop over models evaluated on one shift.
double absolute_impact(std::span<const ModelEvaluation> evaluations);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares of y on x. The slope is evaluated through
/// pairwise differences, sum_ij dx_ij dy_ij / sum_ij dx_ij^2, which equals
/// cov/var and is exactly 1 for y == x and exactly 0 for constant y.
template <typename DerivedX, typename DerivedY>
LineFit fit_line(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    if (x.size() != y.size()) fail(ErrorCode::DimensionMismatch, "x and y differ in length");
    const Eigen::Index n = x.size();
    if (n < 2) fail(ErrorCode::SlopeUndefined, "slope undefined: fewer than 2 points");
    const Eigen::ArrayXd xs = x.template cast<double>();
    const Eigen::ArrayXd ys = y.template cast<double>();
    const Eigen::ArrayXXd dx = xs.replicate(1, n) - xs.transpose().replicate(n, 1);
    const Eigen::ArrayXXd dy = ys.replicate(1, n) - ys.transpose().replicate(n, 1);
    const double sxx = dx.square().sum();
    if (sxx == 0.0) fail(ErrorCode::SlopeUndefined, "slope undefined: base accuracies are all equal");
    const double slope = (dx * dy).sum() / sxx;
    return LineFit{slope, ys.mean() - slope * xs.mean()};
}

/// Slope and intercept of shift accuracy on base accuracy; points are (base, shift).
LineFit id_ood_slope(std::span<const std::pair<double, double>> points);

struct SelectionVotes {
    std::string image_id;
    std::string source;  // e.g. "generated", "control"
    int n_workers = 0;
    int n_selected = 0;
};

struct SelectionFrequencyRecord {
    std::string image_id;
    int n_workers = 0;
    int n_selected = 0;
    double frequency = 0.0;
};

struct SourceFrequency {
    std::string source;
    std::size_t n_images = 0;
    double mean_frequency = 0.0;
};

struct SelectionFrequencySummary {
    std::vector<SelectionFrequencyRecord> records;
    std::vector<SourceFrequency> per_source;  // sorted by source
};

SelectionFrequencySummary selection_frequency(std::span<const SelectionVotes> votes);

}  // namespace dsi
