#include "dsi/filtering/filtering.hpp"

#include <cmath>

#include "dsi/core/records.hpp"

namespace dsi {

CaptionPair build_captions(const std::string& class_label, const ShiftSpec& spec) {
    if (class_label.empty()) fail(ErrorCode::InvalidArgument, "class_label is empty");
    CaptionPair captions;
    captions.c_class = spec.style_flag ? "a " + class_label : "a photo of a " + class_label;
    if (!spec.is_base()) {
        captions.c_shift = spec.style_flag ? spec.caption_fragment : "a photo " + spec.caption_fragment;
    }
    return captions;
}

double nearest_rank_percentile(std::span<const double> values, double p) {
    if (values.empty()) fail(ErrorCode::EmptyInput, "nearest_rank_percentile of an empty list");
    if (!(p > 0.0 && p <= 100.0)) fail(ErrorCode::InvalidArgument, "percentile must lie in (0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    // p * n / 100 rather than p / 100 * n: exact for integral p.
    auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

std::vector<CounterfactualSample> score_batch(std::vector<CounterfactualSample> samples, const std::string& class_label,
                                              const ShiftSpec& spec, const EmbeddingBackend& backend,
                                              const ImageStore& store) {
    const auto captions = build_captions(class_label, spec);
    const Eigen::VectorXd class_text = backend.embed_text(captions.c_class);
    std::optional<Eigen::VectorXd> shift_text;
    if (captions.c_shift) shift_text = backend.embed_text(*captions.c_shift);

    for (auto& sample : samples) {
        if (sample.failed()) continue;
        Image image;
        try {
            image = store.get(sample.image_ref);
        } catch (const std::exception& e) {
            sample.error = std::string("unreadable image: ") + e.what();
            sample.sim_class.reset();
            sample.sim_shift.reset();
            sample.kept.reset();
            continue;
        }
        const Eigen::VectorXd image_embedding = backend.embed_image(image);
        sample.sim_class = cosine_similarity(image_embedding, class_text);
        sample.sim_shift = shift_text ? std::optional<double>(cosine_similarity(image_embedding, *shift_text))
                                      : std::nullopt;
        sample.kept.reset();
    }
    return samples;
}

ClassThreshold calibrate_class_threshold(int class_id, std::span<const Image> reference_images,
                                         const std::string& class_label, const EmbeddingBackend& backend,
                                         double percentile) {
    if (reference_images.empty()) {
        fail(ErrorCode::EmptyInput, "no reference images for class " + std::to_string(class_id));
    }
    const Eigen::VectorXd class_text = backend.embed_text("a photo of a " + class_label);
    std::vector<double> scores;
    scores.reserve(reference_images.size());
    for (const auto& image : reference_images) {
        scores.push_back(cosine_similarity(backend.embed_image(image), class_text));
    }
    return ClassThreshold{class_id, nearest_rank_percentile(scores, percentile), percentile,
                          static_cast<std::int64_t>(scores.size())};
}

bool passes(double sim_class, std::optional<double> sim_shift, double tau_class, std::optional<double> tau_shift) {
    if (!(sim_class >= tau_class)) return false;
    if (!tau_shift) return true;
    return sim_shift.has_value() && *sim_shift >= *tau_shift;
}

FilterResult filter_batch(const std::vector<CounterfactualSample>& samples, const ClassThreshold& tau_class,
                          const ShiftSpec& spec) {
    std::optional<double> tau_shift;
    if (!spec.is_base()) {
        if (!spec.shift_threshold) {
            fail(ErrorCode::InvalidArgument, "shift '" + spec.name + "' has no threshold; calibrate it first");
        }
        tau_shift = spec.shift_threshold;
    }

    FilterResult result;
    result.samples = samples;
    for (auto& sample : result.samples) {
        ++result.yield.total;
        if (sample.failed()) continue;
        if (sample.class_id != tau_class.class_id) {
            fail(ErrorCode::InvalidArgument, "sample " + sample.sample_id + " belongs to class " +
                                                 std::to_string(sample.class_id) + ", threshold to class " +
                                                 std::to_string(tau_class.class_id));
        }
        if (!sample.sim_class || (tau_shift && !sample.sim_shift)) {
            fail(ErrorCode::Unscored, "sample " + sample.sample_id + " has not been scored");
        }
        const bool kept = passes(*sample.sim_class, sample.sim_shift, tau_class.value, tau_shift);
        sample.kept = kept;
        validate(sample);
        result.decisions.push_back(
            FilterDecision{sample.sample_id, *sample.sim_class, sample.sim_shift, tau_class.value, tau_shift, kept});
        if (kept) {
            ++result.yield.kept;
            result.kept.push_back(sample);
        }
    }
    return result;
}

std::vector<std::pair<double, double>> similarity_cdf(std::span<const double> scores, std::span<const double> grid) {
    if (scores.empty()) fail(ErrorCode::EmptyInput, "similarity_cdf of an empty score list");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<std::pair<double, double>> out;
    out.reserve(grid.size());
    for (double x : grid) {
        const auto count = std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
        out.emplace_back(x, static_cast<double>(count) / n);
    }
    return out;
}

}  // namespace dsi
