#include "dsi/evaluation/metrics.hpp"

#include <unordered_set>

namespace dsi {

void validate(const PredictionSet& predictions) {
    std::unordered_set<std::string> seen;
    for (const auto& entry : predictions.entries) {
        if (!seen.insert(entry.sample_id).second) {
            fail(ErrorCode::InvalidArgument,
                 "duplicate sample " + entry.sample_id + " in predictions of " + predictions.model_id);
        }
    }
}

KeptIndex make_kept_index(const std::vector<CounterfactualSample>& samples) {
    KeptIndex index;
    for (const auto& sample : samples) {
        index[sample.sample_id] = SampleStatus{sample.class_id, !sample.failed() && sample.kept.value_or(false)};
    }
    return index;
}

PerClassAccuracy per_class_accuracy(const PredictionSet& predictions, const KeptIndex& index, int min_count) {
    validate(predictions);
    std::map<int, int> kept_per_class;
    for (const auto& [id, status] : index) {
        if (status.kept) ++kept_per_class[status.class_id];
    }

    std::map<int, std::pair<int, int>> tally;  // class -> (correct, total)
    for (const auto& entry : predictions.entries) {
        const auto it = index.find(entry.sample_id);
        if (it == index.end()) fail(ErrorCode::UnknownSample, "prediction for unknown sample " + entry.sample_id);
        if (!it->second.kept) fail(ErrorCode::RejectedSample, "prediction for rejected sample " + entry.sample_id);
        if (it->second.class_id != entry.true_class) {
            fail(ErrorCode::InvalidArgument, "prediction for " + entry.sample_id + " names true class " +
                                                 std::to_string(entry.true_class) + ", sample has class " +
                                                 std::to_string(it->second.class_id));
        }
        auto& [correct, total] = tally[entry.true_class];
        correct += entry.predicted_class == entry.true_class ? 1 : 0;
        ++total;
    }

    PerClassAccuracy out;
    for (const auto& [cls, counts] : tally) {
        if (kept_per_class[cls] < min_count) {
            out.excluded.push_back(cls);
        } else {
            out.accuracy[cls] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
        }
    }
    return out;
}

ModelEvaluation evaluate_model(const std::string& shift_name, const PredictionSet& shift_predictions,
                               const KeptIndex& shift_index, const PredictionSet& base_predictions,
                               const KeptIndex& base_index, int min_count) {
    if (shift_predictions.model_id != base_predictions.model_id) {
        fail(ErrorCode::InvalidArgument, "shift and base predictions come from different models");
    }
    const auto shift_acc = per_class_accuracy(shift_predictions, shift_index, min_count);
    if (shift_acc.accuracy.empty()) {
        fail(ErrorCode::NoEligibleClasses, "no class of shift '" + shift_name + "' has " + std::to_string(min_count) +
                                               " kept samples");
    }
    const auto base_acc = per_class_accuracy(base_predictions, base_index, 1);

    ModelEvaluation eval;
    eval.model_id = shift_predictions.model_id;
    eval.shift_name = shift_name;
    eval.per_class_accuracy = shift_acc.accuracy;
    double shift_sum = 0.0;
    double base_sum = 0.0;
    for (const auto& [cls, acc] : shift_acc.accuracy) {
        const auto it = base_acc.accuracy.find(cls);
        if (it == base_acc.accuracy.end()) {
            fail(ErrorCode::MissingBaseClass, "class " + std::to_string(cls) + " has no base predictions");
        }
        eval.eligible_classes.insert(cls);
        shift_sum += acc;
        base_sum += it->second;
    }
    const double n = static_cast<double>(eval.eligible_classes.size());
    eval.shift_accuracy = shift_sum / n;
    eval.base_accuracy_same_classes = base_sum / n;
    eval.drop = eval.base_accuracy_same_classes - eval.shift_accuracy;
    return eval;
}

double absolute_impact(std::span<const ModelEvaluation> evaluations) {
    if (evaluations.empty()) fail(ErrorCode::EmptyInput, "absolute_impact needs at least one evaluation");
    double sum = 0.0;
    for (const auto& eval : evaluations) {
        if (eval.shift_name != evaluations.front().shift_name) {
            fail(ErrorCode::MixedShifts, "evaluations span shifts '" + evaluations.front().shift_name + "' and '" +
                                             eval.shift_name + "'");
        }
        sum += eval.drop;
    }
    return sum / static_cast<double>(evaluations.size());
}

LineFit id_ood_slope(std::span<const std::pair<double, double>> points) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(points.size()));
    Eigen::VectorXd y(x.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = points[i].first;
        y[static_cast<Eigen::Index>(i)] = points[i].second;
    }
    return fit_line(x, y);
}

SelectionFrequencySummary selection_frequency(std::span<const SelectionVotes> votes) {
    SelectionFrequencySummary out;
    std::map<std::string, std::pair<std::size_t, double>> by_source;
    for (const auto& v : votes) {
        if (v.n_workers < 1) fail(ErrorCode::InvalidArgument, "image " + v.image_id + " has no worker votes");
        if (v.n_selected < 0 || v.n_selected > v.n_workers) {
            fail(ErrorCode::InvalidArgument, "image " + v.image_id + ": " + std::to_string(v.n_selected) +
                                                 " selections from " + std::to_string(v.n_workers) + " workers");
        }
        const double frequency = static_cast<double>(v.n_selected) / static_cast<double>(v.n_workers);
        out.records.push_back(SelectionFrequencyRecord{v.image_id, v.n_workers, v.n_selected, frequency});
        auto& [count, sum] = by_source[v.source];
        ++count;
        sum += frequency;
    }
    for (const auto& [source, agg] : by_source) {
        out.per_source.push_back(SourceFrequency{source, agg.first, agg.second / static_cast<double>(agg.first)});
    }
    return out;
}

}  // namespace dsi
