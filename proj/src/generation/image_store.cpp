#include "dsi/generation/image_store.hpp"

#include "dsi/core/fs_util.hpp"
#include "dsi/error.hpp"

namespace dsi {

std::string MemoryImageStore::put(const std::string& key, const Image& image) {
    std::lock_guard lock(mutex_);
    images_[key] = quantize8(image);
    return key;
}

Image MemoryImageStore::get(const std::string& image_ref) const {
    std::lock_guard lock(mutex_);
    const auto it = images_.find(image_ref);
    if (it == images_.end()) fail(ErrorCode::NotFound, "no image " + image_ref);
    return it->second;
}

std::string DirectoryImageStore::put(const std::string& key, const Image& image) {
    const std::string ref = key + ".ppm";
    const auto path = root_ / ref;
    const auto bytes = encode_ppm(image);
    if (std::filesystem::exists(path)) {
        if (read_binary_file(path) != bytes) {
            fail(ErrorCode::InvalidState, "refusing to overwrite " + path.string() + " with different pixels");
        }
        return ref;
    }
    write_file_atomic(path, std::span<const std::uint8_t>(bytes));
    return ref;
}

Image DirectoryImageStore::get(const std::string& image_ref) const {
    const auto path = root_ / image_ref;
    if (!std::filesystem::exists(path)) fail(ErrorCode::NotFound, "no image " + path.string());
    return read_ppm(path);
}

}  // namespace dsi
