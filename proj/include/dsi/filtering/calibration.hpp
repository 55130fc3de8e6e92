#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsi/core/types.hpp"
#include "dsi/error.hpp"

namespace dsi {

struct InspectionVerdict {
    double percentile = 0.0;
    std::vector<std::string> sample_ids;
    bool all_exhibit_shift = false;
    std::string inspector_id;

    bool operator==(const InspectionVerdict&) const = default;
};

void to_json(nlohmann::json& j, const InspectionVerdict& v);
void from_json(const nlohmann::json& j, InspectionVerdict& v);

/// The panel shown to an inspector at one grid point.
struct InspectionOffer {
    std::string shift_name;
    double percentile = 0.0;
    double score = 0.0;  // nearest-rank percentile of the sim_shift scores
    std::vector<std::string> sample_ids;
};

enum class CalibrationStatus { Open, Calibrated, Uncalibratable };
std::string to_string(CalibrationStatus status);

inline std::vector<double> default_percentile_grid() { return {10, 20, 30, 40, 50, 60, 70, 80}; }
inline constexpr std::size_t kDefaultInspectionCount = 5;

/// Walks the percentile grid in ascending order, one inspector verdict per
/// grid point. The threshold is the score at the first percentile whose
/// verdict says every inspected sample shows the shift.
class ShiftCalibrationSession {
public:
    ShiftCalibrationSession(const ShiftSpec& spec, const std::vector<CounterfactualSample>& scored_samples,
                            std::vector<double> percentile_grid = default_percentile_grid(),
                            std::size_t inspect_count = kDefaultInspectionCount);

    CalibrationStatus status() const { return status_; }
    /// Current panel; throws InvalidState once the session is closed.
    InspectionOffer offer() const;
    /// Accepts the verdict for the offered percentile; any other percentile is rejected.
    CalibrationStatus submit(InspectionVerdict verdict);

    const std::vector<InspectionVerdict>& verdicts() const { return verdicts_; }
    std::optional<double> threshold() const { return threshold_; }
    std::optional<double> accepted_percentile() const { return accepted_percentile_; }
    const std::string& shift_name() const { return shift_name_; }
    const std::vector<double>& grid() const { return grid_; }

private:
    InspectionOffer offer_at(std::size_t index) const;

    std::string shift_name_;
    std::vector<std::string> ids_;
    std::vector<double> scores_;
    std::vector<double> grid_;
    std::size_t k_;
    std::size_t position_ = 0;
    CalibrationStatus status_ = CalibrationStatus::Open;
    std::vector<InspectionVerdict> verdicts_;
    std::optional<double> threshold_;
    std::optional<double> accepted_percentile_;
};

/// Raised when no grid percentile is accepted; carries every verdict.
class Uncalibratable : public Error {
public:
    Uncalibratable(const std::string& shift, std::vector<InspectionVerdict> verdicts)
        : Error(ErrorCode::Uncalibratable, "no grid percentile accepted for shift '" + shift + "'"),
          verdicts_(std::move(verdicts)) {}
    const std::vector<InspectionVerdict>& verdicts() const { return verdicts_; }

private:
    std::vector<InspectionVerdict> verdicts_;
};

struct ShiftCalibration {
    double threshold = 0.0;
    double percentile = 0.0;
    std::vector<InspectionVerdict> verdicts;
};

using Inspector = std::function<InspectionVerdict(const InspectionOffer&)>;

/// Drives a ShiftCalibrationSession with `inspector` (called sequentially).
ShiftCalibration calibrate_shift_threshold(const ShiftSpec& spec, const std::vector<CounterfactualSample>& scored_samples,
                                           const std::vector<double>& percentile_grid, const Inspector& inspector,
                                           std::size_t inspect_count = kDefaultInspectionCount);

/// Test inspectors.
Inspector accept_from_percentile(double first_accepted, std::string inspector_id = "scripted");

}  // namespace dsi
