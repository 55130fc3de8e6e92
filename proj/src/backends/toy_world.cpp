#include "dsi/backends/toy_world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "dsi/core/random.hpp"
#include "dsi/error.hpp"

namespace dsi {

ColorMap ColorMap::grayscale() {
    const Eigen::RowVector3d luma(0.299, 0.587, 0.114);
    ColorMap m;
    m.linear = luma.replicate<3, 1>();
    return m;
}

ToyWorld::ToyWorld() : classes(default_classes()), effects(default_effects()) {}

std::map<int, ToyClass> ToyWorld::default_classes() {
    // Alphabetical, so ids match the sorted directory order of an ImageFolder dump.
    const std::vector<std::pair<std::string, Rgb>> palette = {
        {"blue disk", {0.10, 0.20, 0.90}},   {"cyan disk", {0.10, 0.80, 0.85}},
        {"green disk", {0.10, 0.80, 0.15}},  {"magenta disk", {0.85, 0.10, 0.80}},
        {"orange disk", {0.95, 0.50, 0.05}}, {"purple disk", {0.45, 0.10, 0.60}},
        {"red disk", {0.90, 0.10, 0.10}},    {"yellow disk", {0.90, 0.85, 0.10}},
    };
    std::map<int, ToyClass> out;
    for (int i = 0; i < static_cast<int>(palette.size()); ++i) {
        out[i] = ToyClass{i, palette[i].first, palette[i].second};
    }
    return out;
}

std::map<std::string, ShiftEffect, std::less<>> ToyWorld::default_effects() {
    std::map<std::string, ShiftEffect, std::less<>> fx;
    auto background = [&](const char* word, Rgb color) { fx[word].background = color; };
    auto global = [&](const char* word, Rgb toward, double strength) {
        fx[word].global = ColorMap::tint(toward, strength);
    };
    auto object = [&](const char* word, Rgb toward, double strength) {
        fx[word].object = ColorMap::tint(toward, strength);
    };

    background("grass", {0.20, 0.60, 0.20});
    background("beach", {0.90, 0.80, 0.55});
    background("forest", {0.10, 0.35, 0.12});
    background("water", {0.15, 0.35, 0.80});
    background("road", {0.30, 0.30, 0.32});
    background("rocks", {0.50, 0.45, 0.40});
    background("snow", {1.00, 1.00, 1.00});
    background("flower", {0.85, 0.40, 0.70});
    background("person", {0.80, 0.60, 0.50});
    background("studio", {0.05, 0.05, 0.05});
    background("fog", {0.85, 0.85, 0.85});
    global("fog", {0.85, 0.85, 0.85}, 0.35);
    global("rain", {0.40, 0.45, 0.55}, 0.30);
    global("sunlight", {1.00, 1.00, 0.90}, 0.25);
    global("dusk", {0.90, 0.50, 0.30}, 0.35);
    global("night", {0.02, 0.02, 0.10}, 0.60);

    object("red", {0.90, 0.10, 0.10}, 0.6);
    object("green", {0.10, 0.80, 0.15}, 0.6);
    object("blue", {0.10, 0.20, 0.90}, 0.6);
    object("yellow", {0.90, 0.85, 0.10}, 0.6);
    object("orange", {0.95, 0.50, 0.05}, 0.6);

    // Art styles. "panting" mirrors the misspelled benchmark prompt.
    for (const char* word : {"painting", "panting"}) {
        global(word, {0.60, 0.45, 0.25}, 0.30);
    }
    fx["sketch"].grayscale = true;
    background("sketch", {0.95, 0.95, 0.95});
    background("embroidery", {0.90, 0.85, 0.75});
    global("embroidery", {0.80, 0.70, 0.60}, 0.35);
    return fx;
}

bool ToyWorld::in_disk(int x, int y) const {
    const double dx = x + 0.5 - width / 2.0;
    const double dy = y + 0.5 - height / 2.0;
    return dx * dx + dy * dy <= disk_radius * disk_radius;
}

std::vector<std::string> ToyWorld::words(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

Scene ToyWorld::scene_for(std::string_view prompt) const {
    Rgb background = base_background;
    ColorMap object_map;
    ColorMap global_map;
    bool grayscale = false;
    for (const auto& word : words(prompt)) {
        const auto it = effects.find(word);
        if (it == effects.end()) continue;
        const auto& fx = it->second;
        if (fx.background) background = *fx.background;
        if (fx.object) object_map = object_map.then(*fx.object);
        if (fx.global) global_map = global_map.then(*fx.global);
        grayscale = grayscale || fx.grayscale;
    }
    ColorMap scene_map = grayscale ? ColorMap::grayscale().then(global_map) : global_map;
    return Scene{scene_map(background), object_map.then(scene_map)};
}

Image ToyWorld::render(const Rgb& object_color, const Scene& scene) const {
    Image image(width, height);
    const Eigen::RowVector3d fg = scene.object_map(object_color).transpose();
    const Eigen::RowVector3d bg = scene.background.transpose();
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) image.pixel(x, y) = in_disk(x, y) ? fg : bg;
    }
    return image;
}

Image ToyWorld::add_noise(Image image, std::uint64_t noise_seed) const {
    SplitMix64 rng(noise_seed);
    for (Eigen::Index i = 0; i < image.rgb.size(); ++i) {
        double& v = image.rgb.data()[i];
        v = std::clamp(v + rng.uniform(-noise_amplitude, noise_amplitude), 0.0, 1.0);
    }
    return image;
}

Image ToyWorld::dataset_image(int class_id, std::uint64_t seed) const {
    const auto& cls = toy_class(class_id);
    SplitMix64 rng(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(class_id) + 0x51ED));
    Rgb background = base_background;
    for (int c = 0; c < 3; ++c) {
        background[c] += rng.uniform(-dataset_background_jitter, dataset_background_jitter);
    }
    return add_noise(render(cls.color, Scene{background, ColorMap{}}), rng.next());
}

const ToyClass& ToyWorld::toy_class(int class_id) const {
    const auto it = classes.find(class_id);
    if (it == classes.end()) fail(ErrorCode::NotFound, "toy world has no class " + std::to_string(class_id));
    return it->second;
}

void write_toy_dataset(const ToyWorld& world, const std::filesystem::path& out, std::size_t per_class,
                       std::uint64_t seed) {
    for (const auto& [id, cls] : world.classes) {
        std::string dir_name = cls.label;
        std::replace(dir_name.begin(), dir_name.end(), ' ', '_');
        for (std::size_t i = 0; i < per_class; ++i) {
            char name[32];
            std::snprintf(name, sizeof(name), "%04zu.ppm", i);
            const auto image_seed = seed * 1000003ULL + static_cast<std::uint64_t>(id) * 10007ULL + i;
            write_ppm(world.dataset_image(id, image_seed), out / dir_name / name);
        }
    }
}

}  // namespace dsi
