#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "dsi/core/fs_util.hpp"
#include "dsi/core/random.hpp"
#include "dsi/core/records.hpp"
#include "dsi/core/shift_registry.hpp"
#include "dsi/core/types.hpp"
#include "dsi/image.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dsi;


TEST(TokenString, ReservedDelimiters) {
    EXPECT_EQ(make_token_string("class", 207), "<class-207>");
    EXPECT_TRUE(is_token_string("<class-207>"));
    EXPECT_FALSE(is_token_string("class-207"));
    EXPECT_FALSE(is_token_string("<class>"));
    EXPECT_FALSE(is_token_string("a photo"));
}

TEST(ShiftSpec, ValidatesPlaceholderAndThreshold) {
    EXPECT_NO_THROW(validate(ShiftSpec{"x", "a {token}", "x", false, 0.5}));
    EXPECT_DSI_ERROR(validate(ShiftSpec{"x", "a photo", "x", false, std::nullopt}), ErrorCode::PlaceholderMissing);
    EXPECT_DSI_ERROR(validate(ShiftSpec{"x", "{token} {token}", "x", false, std::nullopt}), ErrorCode::PlaceholderDuplicated);
    EXPECT_THROW(validate(ShiftSpec{"x", "a {token}", "x", false, 1.5}), Error);
    EXPECT_THROW(validate(ShiftSpec{"x", "a {token}", "x", false, -1.01}), Error);
}

TEST(DefaultRegistry, MatchesBenchmarkTable) {
    const auto registry = default_shift_registry();
    const auto& table = oracle::registry_table();
    ASSERT_EQ(registry.size(), table.size());
    ASSERT_EQ(registry.size(), 24u);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& spec = registry.entries()[i];
        EXPECT_EQ(spec.name, table[i].name);
        EXPECT_EQ(spec.prompt_template, table[i].prompt);
        EXPECT_EQ(spec.shift_threshold, table[i].threshold) << spec.name;
        EXPECT_EQ(spec.style_flag, table[i].style) << spec.name;
    }
}

TEST(DefaultRegistry, Examples) {
    const auto registry = default_shift_registry();
    EXPECT_EQ(registry.at("in_the_grass").prompt_template, "A photo of a {token} in the grass");
    EXPECT_EQ(registry.at("in_the_grass").shift_threshold, 0.127);
    EXPECT_EQ(registry.at("embroidery").shift_threshold, 0.259);
    EXPECT_TRUE(registry.at("embroidery").style_flag);
    EXPECT_FALSE(registry.at("base").shift_threshold.has_value());
    EXPECT_TRUE(registry.at("base").is_base());
}

TEST(DefaultRegistry, TemplatesHaveOnePlaceholder) {
    const auto registry = default_shift_registry();
    for (const auto& spec : registry.entries()) {
        const auto first = spec.prompt_template.find("{token}");
        ASSERT_NE(first, std::string::npos);
        EXPECT_EQ(spec.prompt_template.find("{token}", first + 1), std::string::npos);
    }
}

TEST(ShiftRegistry, RejectsDuplicateNames) {
    const ShiftSpec a{"a", "x {token}", "a", false, std::nullopt};
    EXPECT_DSI_ERROR(ShiftRegistry({a, a}), ErrorCode::DuplicateShift);
}

TEST(ShiftRegistry, EditsReturnNewRegistry) {
    const auto registry = default_shift_registry();
    const auto edited = registry.with_threshold("in_the_grass", 0.5);
    EXPECT_EQ(registry.at("in_the_grass").shift_threshold, 0.127);
    EXPECT_EQ(edited.at("in_the_grass").shift_threshold, 0.5);
    EXPECT_THROW(registry.with_threshold("nope", 0.1), Error);
    EXPECT_THROW(registry.with_entry(registry.at("base")), Error);
}

TEST(ShiftRegistry, JsonRoundTrip) {
    test::TempDir dir;
    const auto registry = default_shift_registry().with_threshold("base", 0.25);
    save_shift_registry(registry, dir / "shifts.json");
    EXPECT_EQ(load_shift_registry(dir / "shifts.json"), registry);
    const auto doc = read_json_file(dir / "shifts.json");
    ASSERT_TRUE(doc.is_array());
    EXPECT_TRUE(doc[1].contains("threshold"));
}

TEST(ShiftRegistry, MalformedDocument) {
    EXPECT_DSI_ERROR(shift_registry_from_json(nlohmann::json::parse(R"([{"name": "x"}])")), ErrorCode::ManifestMalformed);
}

TEST(Records, SampleJsonRoundTrip) {
    CounterfactualSample s{"c1-base-s000003", "base/1/c1-base-s000003.ppm", 1, "base", 3, "A photo of a <class-1>",
                           0.25, std::nullopt, true, std::nullopt};
    const nlohmann::json j = s;
    EXPECT_EQ(j.get<CounterfactualSample>(), s);
    s.error = "backend down";
    s.kept.reset();
    s.sim_class.reset();
    EXPECT_EQ(nlohmann::json(s).get<CounterfactualSample>(), s);
}

TEST(Records, SampleInvariants) {
    CounterfactualSample s{"id", "ref", 0, "in_the_grass", 0, "p", std::nullopt, std::nullopt, true, std::nullopt};
    EXPECT_THROW(validate(s), Error);  // kept before scores
    s.sim_class = 0.3;
    EXPECT_THROW(validate(s), Error);  // non-base needs sim_shift
    s.sim_shift = 0.2;
    EXPECT_NO_THROW(validate(s));
    s.sim_shift = 1.5;
    EXPECT_THROW(validate(s), Error);
}

TEST(Records, YieldFraction) {
    EXPECT_FALSE(YieldStats{}.yield_fraction().has_value());
    EXPECT_DOUBLE_EQ(*(YieldStats{10, 7}.yield_fraction()), 0.7);
    const nlohmann::json j = YieldStats{0, 0};
    EXPECT_TRUE(j.at("yield_fraction").is_null());
}

TEST(FsUtil, Sha256KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FsUtil, Timestamps) {
    EXPECT_EQ(utc_timestamp(0), "1970-01-01T00:00:00Z");
    EXPECT_EQ(utc_timestamp(1700000000), "2023-11-14T22:13:20Z");
}

TEST(FsUtil, AtomicWriteReplaces) {
    test::TempDir dir;
    write_file_atomic(dir / "a/b.txt", std::string_view("one"));
    write_file_atomic(dir / "a/b.txt", std::string_view("two"));
    EXPECT_EQ(read_text_file(dir / "a/b.txt"), "two");
    EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir / "a"), std::filesystem::directory_iterator()), 1);
}

TEST(Random, CounterHashIsPure) {
    EXPECT_EQ(counter_hash(1, 2, 3), counter_hash(1, 2, 3));
    EXPECT_NE(counter_hash(1, 2, 3), counter_hash(1, 2, 4));
    EXPECT_NE(counter_hash(1, 2, 3), counter_hash(1, 3, 3));
    SplitMix64 a(7), b(7);
    for (int i = 0; i < 100; ++i) {
        const double u = a.uniform();
        EXPECT_EQ(u, b.uniform());
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Image, PpmRoundTripOfQuantized) {
    SplitMix64 rng(3);
    Image image(5, 4);
    for (Eigen::Index i = 0; i < image.rgb.size(); ++i) image.rgb.data()[i] = rng.uniform(-0.2, 1.2);
    const Image q = quantize8(image);
    EXPECT_EQ(decode_ppm(encode_ppm(image)), q);
    EXPECT_EQ(quantize8(q), q);
    EXPECT_EQ(q.rgb.minCoeff() >= 0.0 && q.rgb.maxCoeff() <= 1.0, true);
    const auto bytes = encode_ppm(image);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 2), "P6");
}

TEST(Image, DecodeRejectsGarbage) {
    const std::vector<std::uint8_t> junk = {'P', '3', '\n'};
    EXPECT_THROW(decode_ppm(junk), Error);
    const std::string truncated = "P6\n2 2\n255\n\x01\x02";
    EXPECT_THROW(decode_ppm(std::vector<std::uint8_t>(truncated.begin(), truncated.end())), Error);
}
