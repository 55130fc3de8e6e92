#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace dsi {

/// RGB image with one pixel per row of `rgb`, row-major over (y, x); channel
/// values are nominally in [0, 1].
template <typename Scalar>
struct ImageT {
    using Pixels = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

    int width = 0;
    int height = 0;
    Pixels rgb;

    ImageT() = default;
    ImageT(int w, int h) : width(w), height(h), rgb(Pixels::Zero(static_cast<Eigen::Index>(w) * h, 3)) {}

    Eigen::Index index(int x, int y) const { return static_cast<Eigen::Index>(y) * width + x; }
    auto pixel(int x, int y) { return rgb.row(index(x, y)); }
    auto pixel(int x, int y) const { return rgb.row(index(x, y)); }
    Eigen::Index pixel_count() const { return rgb.rows(); }

    bool operator==(const ImageT& other) const {
        return width == other.width && height == other.height && (rgb.array() == other.rgb.array()).all();
    }
};

using Image = ImageT<double>;

/// Rounds every channel to the 8-bit grid so that the image survives a
/// write/read cycle through an 8-bit file unchanged.
Image quantize8(const Image& image);

/// Binary PPM (P6, maxval 255).
std::vector<std::uint8_t> encode_ppm(const Image& image);
Image decode_ppm(std::span<const std::uint8_t> bytes);

void write_ppm(const Image& image, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

}  // namespace dsi
