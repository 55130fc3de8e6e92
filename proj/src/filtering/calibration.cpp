#include "dsi/filtering/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dsi/filtering/filtering.hpp"

namespace dsi {

void to_json(nlohmann::json& j, const InspectionVerdict& v) {
    j = nlohmann::json{{"percentile", v.percentile},
                       {"sample_ids", v.sample_ids},
                       {"all_exhibit_shift", v.all_exhibit_shift},
                       {"inspector_id", v.inspector_id}};
}

void from_json(const nlohmann::json& j, InspectionVerdict& v) {
    v.percentile = j.at("percentile").get<double>();
    v.sample_ids = j.value("sample_ids", std::vector<std::string>{});
    v.all_exhibit_shift = j.at("all_exhibit_shift").get<bool>();
    v.inspector_id = j.value("inspector_id", std::string{});
}

std::string to_string(CalibrationStatus status) {
    switch (status) {
        case CalibrationStatus::Open: return "open";
        case CalibrationStatus::Calibrated: return "calibrated";
        case CalibrationStatus::Uncalibratable: return "uncalibratable";
    }
    return "unknown";
}

ShiftCalibrationSession::ShiftCalibrationSession(const ShiftSpec& spec,
                                                 const std::vector<CounterfactualSample>& scored_samples,
                                                 std::vector<double> percentile_grid, std::size_t inspect_count)
    : shift_name_(spec.name), grid_(std::move(percentile_grid)), k_(inspect_count) {
    if (spec.is_base()) fail(ErrorCode::InvalidArgument, "the base shift has no shift threshold to calibrate");
    if (grid_.empty()) fail(ErrorCode::InvalidArgument, "percentile grid is empty");
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        if (!(grid_[i] > 0.0 && grid_[i] <= 100.0)) fail(ErrorCode::InvalidArgument, "grid percentile outside (0, 100]");
        if (i > 0 && !(grid_[i] > grid_[i - 1])) fail(ErrorCode::InvalidArgument, "percentile grid must be ascending");
    }
    if (k_ == 0) fail(ErrorCode::InvalidArgument, "inspection count must be positive");
    for (const auto& sample : scored_samples) {
        if (sample.failed() || !sample.sim_shift) continue;
        ids_.push_back(sample.sample_id);
        scores_.push_back(*sample.sim_shift);
    }
    if (scores_.empty()) fail(ErrorCode::EmptyInput, "no scored samples for shift '" + spec.name + "'");
}

InspectionOffer ShiftCalibrationSession::offer_at(std::size_t index) const {
    InspectionOffer offer;
    offer.shift_name = shift_name_;
    offer.percentile = grid_[index];
    offer.score = nearest_rank_percentile(scores_, offer.percentile);

    std::vector<std::size_t> order(scores_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(scores_[a] - offer.score) < std::abs(scores_[b] - offer.score);
    });
    const auto k = std::min(k_, order.size());
    for (std::size_t i = 0; i < k; ++i) offer.sample_ids.push_back(ids_[order[i]]);
    return offer;
}

InspectionOffer ShiftCalibrationSession::offer() const {
    if (status_ != CalibrationStatus::Open) {
        fail(ErrorCode::InvalidState, "calibration of '" + shift_name_ + "' is " + to_string(status_));
    }
    return offer_at(position_);
}

CalibrationStatus ShiftCalibrationSession::submit(InspectionVerdict verdict) {
    const auto current = offer();
    if (verdict.percentile != current.percentile) {
        fail(ErrorCode::InvalidArgument, "verdict for percentile " + std::to_string(verdict.percentile) +
                                             " but percentile " + std::to_string(current.percentile) + " is offered");
    }
    if (verdict.sample_ids.empty()) verdict.sample_ids = current.sample_ids;
    const bool accepted = verdict.all_exhibit_shift;
    verdicts_.push_back(std::move(verdict));
    if (accepted) {
        status_ = CalibrationStatus::Calibrated;
        threshold_ = current.score;
        accepted_percentile_ = current.percentile;
    } else if (++position_ == grid_.size()) {
        status_ = CalibrationStatus::Uncalibratable;
    }
    return status_;
}

ShiftCalibration calibrate_shift_threshold(const ShiftSpec& spec, const std::vector<CounterfactualSample>& scored_samples,
                                           const std::vector<double>& percentile_grid, const Inspector& inspector,
                                           std::size_t inspect_count) {
    ShiftCalibrationSession session(spec, scored_samples, percentile_grid, inspect_count);
    while (session.status() == CalibrationStatus::Open) {
        const auto offer = session.offer();
        auto verdict = inspector(offer);
        verdict.percentile = offer.percentile;
        session.submit(std::move(verdict));
    }
    if (session.status() == CalibrationStatus::Uncalibratable) throw Uncalibratable(spec.name, session.verdicts());
    return ShiftCalibration{*session.threshold(), *session.accepted_percentile(), session.verdicts()};
}

Inspector accept_from_percentile(double first_accepted, std::string inspector_id) {
    return [first_accepted, id = std::move(inspector_id)](const InspectionOffer& offer) {
        return InspectionVerdict{offer.percentile, offer.sample_ids, offer.percentile >= first_accepted, id};
    };
}

}  // namespace dsi
