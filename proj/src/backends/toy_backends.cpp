#include "dsi/backends/toy_backends.hpp"

#include <cmath>
#include <limits>
#include <mutex>

#include "dsi/core/random.hpp"
#include "dsi/error.hpp"

namespace dsi {

ToyGenerativeBackend::ToyGenerativeBackend(ToyWorld world, int text_embedding_dim)
    : world_(std::move(world)), dim_(text_embedding_dim) {
    if (dim_ < 3) fail(ErrorCode::InvalidArgument, "toy backend needs at least 3 embedding dimensions");
}

void ToyGenerativeBackend::register_token(const std::string& token_string, const Embedding& embedding) {
    if (embedding.size() != dim_) {
        fail(ErrorCode::DimensionMismatch, "embedding for " + token_string + " has dimension " +
                                               std::to_string(embedding.size()));
    }
    std::unique_lock lock(mutex_);
    tokens_[token_string] = embedding;
}

bool ToyGenerativeBackend::has_token(const std::string& token_string) const {
    std::shared_lock lock(mutex_);
    return tokens_.contains(token_string);
}

Image ToyGenerativeBackend::generate(const std::string& prompt, std::int64_t seed) const {
    Rgb color = Rgb::Constant(0.5);
    std::string scene_prompt = prompt;
    {
        std::shared_lock lock(mutex_);
        int found = 0;
        for (const auto& [token, embedding] : tokens_) {
            for (auto pos = prompt.find(token); pos != std::string::npos; pos = prompt.find(token, pos + 1)) {
                if (++found > 1) fail(ErrorCode::MultipleTokens, "prompt contains more than one registered token");
                color = ToyWorld::project_color(embedding);
                scene_prompt = prompt.substr(0, pos) + " " + prompt.substr(pos + token.size());
            }
        }
    }
    const auto noise_seed = splitmix64(static_cast<std::uint64_t>(seed)) ^ fnv1a64(prompt);
    return world_.add_noise(world_.render(color, world_.scene_for(scene_prompt)), noise_seed);
}

ObjectiveValue ToyGenerativeBackend::inversion_objective(const Eigen::VectorXd& embedding, const Image& target,
                                                         const std::string& prompt_template,
                                                         std::uint64_t /*noise_seed*/) const {
    if (embedding.size() != dim_) {
        fail(ErrorCode::DimensionMismatch, "embedding has dimension " + std::to_string(embedding.size()) +
                                               ", backend expects " + std::to_string(dim_));
    }
    if (target.width != world_.width || target.height != world_.height) {
        fail(ErrorCode::DimensionMismatch, "target image size does not match the toy world");
    }
    const Scene scene = world_.scene_for(prompt_template);
    const Image rendered = world_.render(ToyWorld::project_color(embedding), scene);
    const Image::Pixels residual = rendered.rgb - target.rgb;
    const double n = static_cast<double>(target.pixel_count());

    // d(render_p)/dv[0:3] = gain * A for disk pixels, 0 elsewhere.
    Eigen::Vector3d residual_sum = Eigen::Vector3d::Zero();
    for (int y = 0; y < world_.height; ++y) {
        for (int x = 0; x < world_.width; ++x) {
            if (world_.in_disk(x, y)) residual_sum += residual.row(target.index(x, y)).transpose();
        }
    }
    ObjectiveValue out;
    out.loss = residual.squaredNorm() / n;
    out.gradient = Eigen::VectorXd::Zero(dim_);
    out.gradient.head<3>() = (2.0 / n) * ToyWorld::kEmbeddingGain * scene.object_map.linear.transpose() * residual_sum;
    return out;
}

Embedding ToyGenerativeBackend::word_embedding(std::string_view word) const {
    SplitMix64 rng(fnv1a64(word));
    Embedding v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = static_cast<float>(0.05 * rng.normal());
    return v;
}

namespace {

constexpr int kObject = 0;
constexpr int kBackground = 3;
constexpr int kContrast = 6;
constexpr int kGray = 7;
constexpr int kBrightness = 8;
constexpr int kPhoto = 9;
/// Images are embedded object-first: background colour counts half.
constexpr double kBackgroundWeight = 0.5;

double luminance(const Rgb& c) { return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]; }

}  // namespace

ToyEmbeddingBackend::ToyEmbeddingBackend(ToyWorld world) : world_(std::move(world)) {
    auto basis = [] { return Eigen::VectorXd::Zero(kDim).eval(); };
    auto color_word = [&](const std::string& word, const Rgb& c) {
        auto v = basis();
        v.segment<3>(kObject) = c - Rgb::Constant(0.5);
        dictionary_[word] = v;
    };
    for (const auto& [id, cls] : world_.classes) {
        const auto first = ToyWorld::words(cls.label);
        if (!first.empty()) color_word(first.front(), cls.color);
    }
    color_word("white", {1.0, 1.0, 1.0});
    color_word("black", {0.0, 0.0, 0.0});

    for (const auto& [word, fx] : world_.effects) {
        if (dictionary_.contains(word)) continue;
        auto v = basis();
        if (fx.background) v.segment<3>(kBackground) = *fx.background - Rgb::Constant(0.5);
        if (fx.global) {
            v[kBrightness] = luminance(fx.global->operator()(Rgb::Constant(0.5))) - 0.5;
        }
        if (fx.grayscale) v[kGray] = 1.0;
        if (!v.isZero()) dictionary_[word] = v;
    }
    auto axis = [&](const std::string& word, int index, double value) {
        auto v = dictionary_.contains(word) ? dictionary_[word] : basis();
        v[index] += value;
        dictionary_[word] = v;
    };
    axis("disk", kContrast, 0.3);
    axis("photo", kPhoto, 0.5);
    axis("pencil", kGray, 1.0);
    axis("bright", kBrightness, 0.3);
    axis("lighting", kContrast, 0.3);
}

Eigen::VectorXd ToyEmbeddingBackend::keyword_basis(std::string_view word) const {
    const auto it = dictionary_.find(word);
    return it == dictionary_.end() ? Eigen::VectorXd::Zero(kDim) : it->second;
}

Eigen::VectorXd ToyEmbeddingBackend::image_features(const Image& image) const {
    // Geometry relative to the image so arbitrary sizes still embed.
    const double cx = image.width / 2.0;
    const double cy = image.height / 2.0;
    const double radius = std::min(image.width, image.height) / 4.0;
    Rgb fg = Rgb::Zero();
    Rgb bg = Rgb::Zero();
    double n_fg = 0.0;
    double n_bg = 0.0;
    double spread = 0.0;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const Rgb c = image.pixel(x, y).transpose();
            const double dx = x + 0.5 - cx;
            const double dy = y + 0.5 - cy;
            const double r2 = dx * dx + dy * dy;
            if (r2 <= 0.5625 * radius * radius) {
                fg += c;
                n_fg += 1.0;
                spread += c.maxCoeff() - c.minCoeff();
            } else if (r2 >= 1.5625 * radius * radius) {
                bg += c;
                n_bg += 1.0;
            }
        }
    }
    if (n_fg > 0) fg /= n_fg;
    if (n_bg > 0) bg /= n_bg;
    spread /= std::max(1.0, n_fg);

    Eigen::VectorXd f = Eigen::VectorXd::Zero(kDim);
    f.segment<3>(kObject) = fg - Rgb::Constant(0.5);
    f.segment<3>(kBackground) = kBackgroundWeight * (bg - Rgb::Constant(0.5));
    f[kContrast] = (fg - bg).norm() / std::sqrt(3.0);
    f[kGray] = std::max(0.0, 1.0 - 4.0 * spread);
    f[kBrightness] = luminance(image.rgb.colwise().mean().transpose()) - 0.5;
    f[kPhoto] = 0.5;
    return f;
}

Eigen::VectorXd ToyEmbeddingBackend::embed_image(const Image& image) const {
    const Eigen::VectorXd f = image_features(image);
    const double norm = f.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) return Eigen::VectorXd::Unit(kDim, kPhoto);
    return f / norm;
}

Eigen::VectorXd ToyEmbeddingBackend::embed_text(const std::string& text) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(kDim);
    for (const auto& word : ToyWorld::words(text)) sum += keyword_basis(word);
    const double norm = sum.norm();
    if (!(norm > 1e-12)) return Eigen::VectorXd::Unit(kDim, kPhoto);
    return sum / norm;
}

ToyClassifier::ToyClassifier(ToyWorld world, int patch_half_width)
    : world_(std::move(world)), half_width_(patch_half_width) {
    if (half_width_ < 1) fail(ErrorCode::InvalidArgument, "patch half width must be positive");
}

std::string ToyClassifier::model_id() const {
    return "toy-patch" + std::to_string(half_width_);
}

int ToyClassifier::predict(const Image& image) const {
    const int cx = image.width / 2;
    const int cy = image.height / 2;
    Rgb mean = Rgb::Zero();
    double n = 0.0;
    for (int y = std::max(0, cy - half_width_); y < std::min(image.height, cy + half_width_); ++y) {
        for (int x = std::max(0, cx - half_width_); x < std::min(image.width, cx + half_width_); ++x) {
            mean += image.pixel(x, y).transpose();
            n += 1.0;
        }
    }
    if (n > 0) mean /= n;
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& [id, cls] : world_.classes) {
        const double d = (cls.color - mean).squaredNorm();
        if (d < best_dist) {
            best_dist = d;
            best = id;
        }
    }
    return best;
}

std::vector<std::unique_ptr<ClassifierBackend>> toy_classifier_sweep(const ToyWorld& world) {
    std::vector<std::unique_ptr<ClassifierBackend>> models;
    for (int half_width : {2, 4, 6, 8, 10, 12}) {
        models.push_back(std::make_unique<ToyClassifier>(world, half_width));
    }
    return models;
}

}  // namespace dsi
