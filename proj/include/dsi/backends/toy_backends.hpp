#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>

#include "dsi/backends/contracts.hpp"
#include "dsi/backends/toy_world.hpp"

namespace dsi {

/// Generative backend over ToyWorld. The rendered disk colour is affine in
/// the first three embedding components, so the inversion objective is a
/// quadratic with a closed-form optimum.
class ToyGenerativeBackend final : public GenerativeBackend {
public:
    explicit ToyGenerativeBackend(ToyWorld world = {}, int text_embedding_dim = 768);

    std::string backend_id() const override { return "toy-generative-v1"; }
    int text_embedding_dim() const override { return dim_; }

    void register_token(const std::string& token_string, const Embedding& embedding) override;
    bool has_token(const std::string& token_string) const override;

    Image generate(const std::string& prompt, std::int64_t seed) const override;

    /// Mean over pixels of the squared RGB distance between the noiseless
    /// render and `target`. The toy objective is deterministic, so
    /// `noise_seed` has no effect.
    ObjectiveValue inversion_objective(const Eigen::VectorXd& embedding, const Image& target,
                                       const std::string& prompt_template,
                                       std::uint64_t noise_seed) const override;

    Embedding word_embedding(std::string_view word) const override;

    const ToyWorld& world() const { return world_; }

private:
    ToyWorld world_;
    int dim_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, Embedding, std::less<>> tokens_;
};

/// Embedding backend over ToyWorld images and a fixed keyword dictionary.
///
/// Axes: object RGB (3), background RGB (3), object/background contrast,
/// grayscale indicator (of the object), brightness, "photo". Background
/// colour is weighted by one half. Colour axes are centred at 0.5.
class ToyEmbeddingBackend final : public EmbeddingBackend {
public:
    static constexpr int kDim = 10;

    explicit ToyEmbeddingBackend(ToyWorld world = {});

    std::string backend_id() const override { return "toy-embedding-v1"; }
    int dim() const override { return kDim; }

    Eigen::VectorXd embed_image(const Image& image) const override;
    Eigen::VectorXd embed_text(const std::string& text) const override;

    /// Raw (unnormalized) image features.
    Eigen::VectorXd image_features(const Image& image) const;
    /// Per-keyword basis vector; zero for unknown words.
    Eigen::VectorXd keyword_basis(std::string_view word) const;

private:
    ToyWorld world_;
    std::map<std::string, Eigen::VectorXd, std::less<>> dictionary_;
};

/// Nearest-palette-colour classifier over a square centre patch. Wider patches
/// mix in more background and so are less robust to background shifts.
class ToyClassifier final : public ClassifierBackend {
public:
    ToyClassifier(ToyWorld world, int patch_half_width);

    std::string model_id() const override;
    int predict(const Image& image) const override;

private:
    ToyWorld world_;
    int half_width_;
};

/// Six toy classifiers of graded patch width, used as a model sweep.
std::vector<std::unique_ptr<ClassifierBackend>> toy_classifier_sweep(const ToyWorld& world);

}  // namespace dsi
