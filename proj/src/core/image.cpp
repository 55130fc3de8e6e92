#include "dsi/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "dsi/core/fs_util.hpp"
#include "dsi/error.hpp"

namespace dsi {

namespace {

std::uint8_t to_byte(double v) {
    if (!(v > 0.0)) return 0;  // also maps NaN to 0
    if (v >= 1.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

}  // namespace

Image quantize8(const Image& image) {
    Image out = image;
    out.rgb = image.rgb.unaryExpr([](double v) { return to_byte(v) / 255.0; });
    return out;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() + static_cast<std::size_t>(image.pixel_count()) * 3);
    for (Eigen::Index i = 0; i < image.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) bytes.push_back(to_byte(image.rgb(i, c)));
    }
    return bytes;
}

Image decode_ppm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        long value = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos++] - '0');
            if (++digits > 9) fail(ErrorCode::Io, "PPM header value too large");
        }
        if (digits == 0) fail(ErrorCode::Io, "malformed PPM header");
        return value;
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') fail(ErrorCode::Io, "not a binary PPM image");
    pos = 2;
    const long width = read_int();
    const long height = read_int();
    const long maxval = read_int();
    if (width <= 0 || height <= 0 || maxval != 255) fail(ErrorCode::Io, "unsupported PPM geometry or depth");
    ++pos;  // single whitespace byte before the raster
    const auto needed = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
    if (bytes.size() < pos + needed) fail(ErrorCode::Io, "truncated PPM raster");
    Image image(static_cast<int>(width), static_cast<int>(height));
    for (Eigen::Index i = 0; i < image.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) image.rgb(i, c) = bytes[pos++] / 255.0;
    }
    return image;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
    write_file_atomic(path, encode_ppm(image));
}

Image read_ppm(const std::filesystem::path& path) {
    return decode_ppm(read_binary_file(path));
}

}  // namespace dsi
