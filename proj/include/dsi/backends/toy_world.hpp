#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dsi/image.hpp"

namespace dsi {

using Rgb = Eigen::Vector3d;

/// Affine colour transform c -> linear * c + offset.
struct ColorMap {
    Eigen::Matrix3d linear = Eigen::Matrix3d::Identity();
    Rgb offset = Rgb::Zero();

    Rgb operator()(const Rgb& c) const { return linear * c + offset; }
    /// Applies *this first, then `next`.
    ColorMap then(const ColorMap& next) const { return {next.linear * linear, next.linear * offset + next.offset}; }

    static ColorMap tint(const Rgb& toward, double strength) {
        return {(1.0 - strength) * Eigen::Matrix3d::Identity(), strength * toward};
    }
    static ColorMap grayscale();
};

/// What a recognized prompt keyword does to a rendered scene.
struct ShiftEffect {
    std::optional<Rgb> background;
    std::optional<ColorMap> object;  // object colour only
    std::optional<ColorMap> global;  // whole image
    bool grayscale = false;
};

/// Resolved effects of a prompt: background colour and the affine map from
/// the object's intrinsic colour to its rendered colour.
struct Scene {
    Rgb background;
    ColorMap object_map;
};

struct ToyClass {
    int class_id = 0;
    std::string label;
    Rgb color;
};

/// Desk-scale rendering substrate: a centred disk whose colour identifies the
/// class, over a background that encodes the distribution shift.
class ToyWorld {
public:
    ToyWorld();

    int width = 32;
    int height = 32;
    double disk_radius = 8.0;
    double noise_amplitude = 0.02;
    Rgb base_background{0.5, 0.5, 0.5};
    /// Half-width of the per-channel jitter applied to dataset-image backgrounds.
    double dataset_background_jitter = 0.35;

    std::map<int, ToyClass> classes;
    std::map<std::string, ShiftEffect, std::less<>> effects;

    /// Default 8-class palette ("blue disk", "cyan disk", ...), ids in label order.
    static std::map<int, ToyClass> default_classes();
    static std::map<std::string, ShiftEffect, std::less<>> default_effects();

    bool in_disk(int x, int y) const;
    /// Lower-cased alphanumeric words; unknown words are kept and ignored later.
    static std::vector<std::string> words(std::string_view text);
    Scene scene_for(std::string_view prompt) const;

    static constexpr double kEmbeddingGain = 1.0;
    /// Intrinsic object colour under an embedding: 0.5 + v[0:3].
    template <typename Derived>
    static Rgb project_color(const Eigen::MatrixBase<Derived>& v) {
        Rgb c = Rgb::Constant(0.5);
        const auto n = std::min<Eigen::Index>(3, v.size());
        for (Eigen::Index i = 0; i < n; ++i) c[i] += kEmbeddingGain * static_cast<double>(v[i]);
        return c;
    }

    /// Noiseless, unclamped render; affine in `object_color`.
    Image render(const Rgb& object_color, const Scene& scene) const;
    /// Adds seeded uniform noise of `noise_amplitude` and clamps to [0, 1].
    Image add_noise(Image image, std::uint64_t noise_seed) const;

    /// A "real" training/validation image of a class: palette colour, jittered
    /// neutral background, noise.
    Image dataset_image(int class_id, std::uint64_t seed) const;

    const ToyClass& toy_class(int class_id) const;
};

/// Writes `per_class` dataset images of every class in ImageFolder layout:
/// `out/<label with '_' for ' '>/NNNN.ppm`.
void write_toy_dataset(const ToyWorld& world, const std::filesystem::path& out, std::size_t per_class,
                       std::uint64_t seed);

}  // namespace dsi
