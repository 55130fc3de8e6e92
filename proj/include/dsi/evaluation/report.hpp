#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsi/evaluation/metrics.hpp"

namespace dsi {

struct ReportPoint {
    std::string model_id;
    double base_acc = 0.0;
    double shift_acc = 0.0;
    double drop = 0.0;

    bool operator==(const ReportPoint&) const = default;
};

struct ShiftReport {
    std::string shift_name;
    std::vector<ReportPoint> points;  // ordered by model_id
    double absolute_impact = 0.0;
    std::optional<double> id_ood_slope;
    std::optional<double> intercept;
    std::optional<std::string> slope_undefined_reason;
    std::size_t n_models = 0;
    std::size_t n_eligible_classes = 0;

    bool operator==(const ShiftReport&) const = default;
};

/// Degenerate sweeps (one model, constant base accuracy) keep a null slope
/// with the reason instead of failing.
ShiftReport build_shift_report(const std::string& shift_name, std::span<const ModelEvaluation> evaluations);

/// "model_id,base_acc,shift_acc,drop" with round-trip precision.
std::string report_csv(const ShiftReport& report);
/// {shift, absolute_impact, id_ood_slope, intercept, n_models, n_eligible_classes, slope_undefined_reason}
nlohmann::json report_summary(const ShiftReport& report);
/// Rebuilds a report from its CSV table and summary record.
ShiftReport report_from_formats(const std::string& csv, const nlohmann::json& summary);

/// Shift accuracy against base accuracy, one dot per model, with the fitted line.
std::string scatter_svg(const ShiftReport& report);
/// One dot per shift: absolute impact (x) against ID/OOD slope (y).
std::string impact_vs_slope_svg(std::span<const ShiftReport> reports);

/// Writes <shift>.csv, <shift>.summary.json and <shift>.scatter.svg under `dir`.
void write_shift_report(const ShiftReport& report, const std::filesystem::path& dir);
ShiftReport read_shift_report(const std::filesystem::path& dir, const std::string& shift_name);

// Prediction ingestion.
std::string predictions_csv(const PredictionSet& predictions);
PredictionSet parse_predictions_csv(const std::string& model_id, const std::string& csv);

struct PredictionRun {
    std::string model_id;
    std::string shift_name;
    PredictionSet predictions;
};

/// Run manifest: {"model_id": ..., "shift": ..., "predictions": "<csv path relative to the manifest>"}.
PredictionRun read_prediction_run(const std::filesystem::path& manifest_path);
void write_prediction_run(const PredictionRun& run, const std::filesystem::path& manifest_path);

}  // namespace dsi
