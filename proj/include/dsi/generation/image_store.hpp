#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>

#include "dsi/image.hpp"

namespace dsi {

/// Where sample pixels live. `put` returns the stable image_ref recorded in
/// the sample; images are stored 8-bit quantized, so `get(put(x))` equals
/// `quantize8(x)`.
class ImageStore {
public:
    virtual ~ImageStore() = default;
    virtual std::string put(const std::string& key, const Image& image) = 0;
    virtual Image get(const std::string& image_ref) const = 0;
};

class MemoryImageStore final : public ImageStore {
public:
    std::string put(const std::string& key, const Image& image) override;
    Image get(const std::string& image_ref) const override;

private:
    mutable std::mutex mutex_;
    std::map<std::string, Image> images_;
};

/// PPM files under a root directory; refs are paths relative to the root.
/// Files are write-once: re-putting identical pixels is a no-op, different
/// pixels under an existing key are refused.
class DirectoryImageStore final : public ImageStore {
public:
    explicit DirectoryImageStore(std::filesystem::path root) : root_(std::move(root)) {}

    std::string put(const std::string& key, const Image& image) override;
    Image get(const std::string& image_ref) const override;

    std::filesystem::path path_of(const std::string& image_ref) const { return root_ / image_ref; }
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

}  // namespace dsi
