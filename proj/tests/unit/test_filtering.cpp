#include <cmath>

#include <gtest/gtest.h>

#include "dsi/backends/toy_backends.hpp"
#include "dsi/core/shift_registry.hpp"
#include "dsi/filtering/calibration.hpp"
#include "dsi/filtering/filtering.hpp"
#include "dsi/generation/image_store.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dsi;

namespace {

/// Embeds a 1x1 image whose red channel is s at cosine s from every text.
class ScoreEncodingBackend final : public EmbeddingBackend {
public:
    std::string backend_id() const override { return "score-encoding"; }
    int dim() const override { return 2; }
    Eigen::VectorXd embed_image(const Image& image) const override {
        const double s = image.rgb(0, 0);
        return Eigen::Vector2d(s, std::sqrt(1 - s * s));
    }
    Eigen::VectorXd embed_text(const std::string&) const override { return Eigen::Vector2d(1, 0); }
};

Image encoded(double s) {
    Image image(1, 1);
    image.rgb(0, 0) = s;
    return image;
}

std::vector<double> ten_scores() { return {0.30, 0.10, 0.55, 0.25, 0.15, 0.50, 0.20, 0.45, 0.35, 0.40}; }

std::vector<CounterfactualSample> scored(const std::vector<double>& sim_shift, int class_id = 0) {
    std::vector<CounterfactualSample> out;
    for (std::size_t i = 0; i < sim_shift.size(); ++i) {
        CounterfactualSample s;
        s.sample_id = "s" + std::to_string(i);
        s.image_ref = s.sample_id;
        s.class_id = class_id;
        s.shift_name = "in_the_grass";
        s.seed = static_cast<std::int64_t>(i);
        s.sim_class = 0.5;
        s.sim_shift = sim_shift[i];
        out.push_back(s);
    }
    return out;
}

}  // namespace

TEST(Captions, Fixture) {
    const auto registry = default_shift_registry();
    for (const auto& c : oracle::caption_cases()) {
        const auto captions = build_captions(c.label, registry.at(c.shift));
        EXPECT_EQ(captions.c_class, c.c_class) << c.shift;
        EXPECT_EQ(captions.c_shift, c.c_shift) << c.shift;
    }
    EXPECT_DSI_ERROR(build_captions("", registry.at("base")), ErrorCode::InvalidArgument);
}

TEST(Cosine, Examples) {
    const Eigen::Vector3d x(1, 0, 0), y(0, 1, 0);
    EXPECT_EQ(cosine_similarity(x, x), 1.0);
    EXPECT_EQ(cosine_similarity(x, y), 0.0);
    EXPECT_NEAR(cosine_similarity(x, Eigen::Vector3d(1, 1, 0) / std::sqrt(2.0)), 0.7071, 1e-4);
    EXPECT_DSI_ERROR(cosine_similarity(Eigen::VectorXd(x), Eigen::VectorXd(Eigen::Vector2d(1, 0))), ErrorCode::DimensionMismatch);
    EXPECT_DSI_ERROR(cosine_similarity(x, Eigen::Vector3d(2, 0, 0)), ErrorCode::InvalidArgument);
}

TEST(Cosine, SymmetricAndBounded) {
    SplitMix64 rng(1);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd a(6), b(6);
        for (int d = 0; d < 6; ++d) {
            a[d] = rng.normal();
            b[d] = rng.normal();
        }
        a.normalize();
        b.normalize();
        EXPECT_EQ(cosine_similarity(a, b), cosine_similarity(b, a));
        EXPECT_LE(std::abs(cosine_similarity(a, b)), 1.0);
    }
}

TEST(Percentile, Examples) {
    const auto values = ten_scores();
    EXPECT_EQ(nearest_rank_percentile(values, 20), 0.15);
    EXPECT_EQ(nearest_rank_percentile(values, 100), 0.55);
    const std::vector<double> four = {0.4, 0.1, 0.3, 0.2};
    EXPECT_EQ(nearest_rank_percentile(four, 50), 0.2);
    const std::vector<double> one = {0.7};
    for (double p : {1.0, 37.5, 99.0, 100.0}) EXPECT_EQ(nearest_rank_percentile(one, p), 0.7);
    EXPECT_DSI_ERROR(nearest_rank_percentile(std::vector<double>{}, 20), ErrorCode::EmptyInput);
    EXPECT_DSI_ERROR(nearest_rank_percentile(one, 0), ErrorCode::InvalidArgument);
}

TEST(Percentile, MatchesBruteForce) {
    SplitMix64 rng(2);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> values(1 + rng.below(60));
        for (auto& v : values) v = std::round(rng.uniform(-1, 1) * 20) / 20;  // ties
        const int p = 1 + static_cast<int>(rng.below(99));
        const double got = nearest_rank_percentile(values, p);
        EXPECT_EQ(got, oracle::percentile(values, p));
        EXPECT_NE(std::find(values.begin(), values.end(), got), values.end());
    }
}

TEST(Scoring, ToyColourOracle) {
    ToyEmbeddingBackend embed;
    ToyWorld world;
    MemoryImageStore store;
    const auto spec = default_shift_registry().at("base");
    std::vector<CounterfactualSample> samples(2);
    samples[0].sample_id = "red";
    samples[0].image_ref = store.put("red", world.dataset_image(6, 0));
    samples[1].sample_id = "blue";
    samples[1].image_ref = store.put("blue", world.dataset_image(0, 0));
    const auto out = score_batch(samples, "red disk", spec, embed, store);
    EXPECT_GT(*out[0].sim_class, *out[1].sim_class);
    EXPECT_FALSE(out[0].sim_shift.has_value());
    EXPECT_EQ(score_batch(samples, "red disk", spec, embed, store), out);
}

TEST(Scoring, ShiftScoresAndUnreadableImages) {
    ToyEmbeddingBackend embed;
    ToyWorld world;
    MemoryImageStore store;
    const auto spec = default_shift_registry().at("in_the_grass");
    std::vector<CounterfactualSample> samples(3);
    samples[0].sample_id = "ok";
    samples[0].image_ref = store.put("ok", world.dataset_image(2, 0));
    samples[1].sample_id = "missing";
    samples[1].image_ref = "nowhere";
    samples[2].sample_id = "failed";
    samples[2].error = "backend down";
    const auto out = score_batch(samples, "green disk", spec, embed, store);
    EXPECT_TRUE(out[0].sim_shift.has_value());
    EXPECT_TRUE(out[1].failed());
    EXPECT_FALSE(out[2].sim_class.has_value());
}

TEST(ClassThreshold, ComposesScoreAndPercentile) {
    ScoreEncodingBackend backend;
    std::vector<Image> refs;
    for (double s : ten_scores()) refs.push_back(encoded(s));
    const auto t = calibrate_class_threshold(4, refs, "plate", backend);
    EXPECT_EQ(t.value, 0.15);
    EXPECT_EQ(t.class_id, 4);
    EXPECT_EQ(t.n_reference, 10);
    EXPECT_EQ(t.percentile, 20.0);

    const std::vector<Image> four = {encoded(0.1), encoded(0.2), encoded(0.3), encoded(0.4)};
    EXPECT_EQ(calibrate_class_threshold(0, four, "x", backend, 50).value, 0.2);
    const std::vector<Image> same(7, encoded(0.25));
    EXPECT_EQ(calibrate_class_threshold(0, same, "x", backend).value, 0.25);
    EXPECT_DSI_ERROR(calibrate_class_threshold(0, {}, "x", backend), ErrorCode::EmptyInput);
}

TEST(Filter, Examples) {
    const auto grass = default_shift_registry().at("in_the_grass");
    auto samples = scored({0.10, 0.12, 0.126, 0.127, 0.13, 0.2, 0.3, 0.4, 0.5, 0.6});
    const auto result = filter_batch(samples, ClassThreshold{0, 0.4}, grass);
    EXPECT_EQ(result.yield.kept, 7);
    EXPECT_EQ(result.yield.total, 10);
    EXPECT_DOUBLE_EQ(*result.yield.yield_fraction(), 0.7);
    EXPECT_TRUE(*result.samples[3].kept);  // boundary 0.127 is kept

    auto vacuous = grass;
    vacuous.shift_threshold = -1.0;
    samples[2].error = "failed";
    samples[2].sim_class.reset();
    samples[2].sim_shift.reset();
    const auto all = filter_batch(samples, ClassThreshold{0, -1.0}, vacuous);
    EXPECT_EQ(all.yield.kept, 9);
    EXPECT_EQ(all.yield.total, 10);
    EXPECT_EQ(all.decisions.size(), 9u);

    auto strict = grass;
    strict.shift_threshold = 0.61;
    EXPECT_EQ(filter_batch(samples, ClassThreshold{0, -1.0}, strict).yield.kept, 0);
}

TEST(Filter, RejectsUnscored) {
    const auto grass = default_shift_registry().at("in_the_grass");
    auto samples = scored({0.2});
    samples[0].sim_shift.reset();
    EXPECT_DSI_ERROR(filter_batch(samples, ClassThreshold{0, 0.0}, grass), ErrorCode::Unscored);
}

TEST(Filter, MatchesEnumerationAndIsMonotone) {
    SplitMix64 rng(3);
    const auto registry = default_shift_registry();
    for (int trial = 0; trial < 200; ++trial) {
        const bool base = trial % 4 == 0;
        auto spec = registry.at(base ? "base" : "at_dusk");
        auto grid = [&] { return std::round(rng.uniform(-1, 1) * 10) / 10; };
        std::vector<double> shifts(1 + rng.below(30));
        for (auto& s : shifts) s = grid();
        auto samples = scored(shifts);
        for (auto& s : samples) {
            s.sim_class = grid();
            s.shift_name = spec.name;
            if (base) s.sim_shift.reset();
        }
        const double tau_class = grid();
        if (!base) spec.shift_threshold = grid();
        const auto result = filter_batch(samples, ClassThreshold{0, tau_class}, spec);

        std::set<std::string> expected, got, raised;
        for (const auto& s : samples) {
            if (oracle::kept(*s.sim_class, s.sim_shift, tau_class, spec.shift_threshold)) expected.insert(s.sample_id);
        }
        for (const auto& s : result.kept) got.insert(s.sample_id);
        EXPECT_EQ(got, expected);

        auto higher = spec;
        if (!base) higher.shift_threshold = *spec.shift_threshold + 0.1;
        for (const auto& s : filter_batch(samples, ClassThreshold{0, tau_class + 0.1}, higher).kept) {
            raised.insert(s.sample_id);
        }
        EXPECT_TRUE(std::includes(got.begin(), got.end(), raised.begin(), raised.end()));
        // Re-filtering is a no-op.
        EXPECT_EQ(filter_batch(result.samples, ClassThreshold{0, tau_class}, spec).samples, result.samples);
    }
}

TEST(Calibration, AcceptFirst) {
    const auto spec = default_shift_registry().at("in_the_grass");
    const auto samples = scored(ten_scores());
    const auto result = calibrate_shift_threshold(spec, samples, {20, 40, 60, 80}, accept_from_percentile(0));
    EXPECT_EQ(result.threshold, 0.15);
    EXPECT_EQ(result.percentile, 20);
    EXPECT_EQ(result.verdicts.size(), 1u);
}

TEST(Calibration, RejectAll) {
    const auto spec = default_shift_registry().at("in_the_grass");
    try {
        calibrate_shift_threshold(spec, scored(ten_scores()), {20, 40, 60, 80}, accept_from_percentile(1000));
        FAIL();
    } catch (const Uncalibratable& e) {
        EXPECT_EQ(e.code(), ErrorCode::Uncalibratable);
        EXPECT_EQ(e.verdicts().size(), 4u);
    }
}

TEST(Calibration, ScriptedInspectorFromForty) {
    const auto spec = default_shift_registry().at("in_the_grass");
    const auto scores = ten_scores();
    const auto result = calibrate_shift_threshold(spec, scored(scores), {20, 40, 60, 80}, accept_from_percentile(40));
    EXPECT_EQ(result.threshold, oracle::percentile(scores, 40));
    EXPECT_EQ(result.threshold, 0.25);
    ASSERT_EQ(result.verdicts.size(), 2u);
    EXPECT_FALSE(result.verdicts[0].all_exhibit_shift);
    EXPECT_TRUE(result.verdicts[1].all_exhibit_shift);
}

TEST(Calibration, OfferShowsNearestSamples) {
    const auto spec = default_shift_registry().at("in_the_grass");
    ShiftCalibrationSession session(spec, scored(ten_scores()), {50}, 3);
    const auto offer = session.offer();
    EXPECT_EQ(offer.score, 0.30);
    // 0.30 itself (s0), then 0.25 (s3) and 0.35 (s8) at equal distance, in input order.
    const std::vector<std::string> expected = {"s0", "s3", "s8"};
    EXPECT_EQ(offer.sample_ids, expected);
}

TEST(Calibration, WrongPercentileIsRejected) {
    const auto spec = default_shift_registry().at("in_the_grass");
    ShiftCalibrationSession session(spec, scored(ten_scores()), {20, 40}, 5);
    EXPECT_DSI_ERROR(session.submit({40, {"s0"}, true, "me"}), ErrorCode::InvalidArgument);
    EXPECT_EQ(session.submit({20, {}, false, "me"}), CalibrationStatus::Open);
    EXPECT_EQ(session.verdicts()[0].sample_ids.size(), 5u);
    EXPECT_EQ(session.submit({40, {}, true, "me"}), CalibrationStatus::Calibrated);
    EXPECT_DSI_ERROR(session.offer(), ErrorCode::InvalidState);
}

TEST(Calibration, GridValidation) {
    const auto spec = default_shift_registry().at("in_the_grass");
    EXPECT_THROW(ShiftCalibrationSession(spec, scored(ten_scores()), {40, 20}), Error);
    EXPECT_THROW(ShiftCalibrationSession(spec, scored(ten_scores()), {}), Error);
    EXPECT_THROW(ShiftCalibrationSession(spec, {}, {20}), Error);
}

TEST(Calibration, VerdictJsonRoundTrip) {
    const InspectionVerdict v{30, {"a", "b"}, true, "alice"};
    EXPECT_EQ(nlohmann::json(v).get<InspectionVerdict>(), v);
}

TEST(Cdf, Examples) {
    const std::vector<double> one = {0.5};
    const std::vector<double> grid = {0.4, 0.5, 0.6};
    const auto cdf = similarity_cdf(one, grid);
    EXPECT_EQ(cdf[0].second, 0.0);
    EXPECT_EQ(cdf[1].second, 1.0);
    EXPECT_EQ(cdf[2].second, 1.0);

    std::vector<double> uniform;
    for (int i = 1; i <= 10; ++i) uniform.push_back(i / 10.0);
    const std::vector<double> half = {0.5};
    EXPECT_EQ(similarity_cdf(uniform, half)[0].second, 0.5);
    EXPECT_DSI_ERROR(similarity_cdf(std::vector<double>{}, half), ErrorCode::EmptyInput);
}

TEST(Cdf, MonotoneWithRightLimitOne) {
    SplitMix64 rng(4);
    std::vector<double> scores(40), grid(25);
    for (auto& s : scores) s = rng.uniform(-1, 1);
    for (auto& g : grid) g = rng.uniform(-1.2, 1.2);
    std::sort(grid.begin(), grid.end());
    grid.push_back(*std::max_element(scores.begin(), scores.end()));
    const auto cdf = similarity_cdf(scores, grid);
    for (std::size_t i = 1; i < cdf.size(); ++i) EXPECT_GE(cdf[i].second, cdf[i - 1].second);
    EXPECT_EQ(cdf.back().second, 1.0);
}
