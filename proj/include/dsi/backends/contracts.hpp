#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "dsi/core/types.hpp"
#include "dsi/image.hpp"

namespace dsi {

struct ObjectiveValue {
    double loss = 0.0;
    Eigen::VectorXd gradient;
};

/// Text-to-image model with a frozen network: the only trainable quantity it
/// exposes is a token embedding, through `inversion_objective`.
class GenerativeBackend {
public:
    virtual ~GenerativeBackend() = default;

    virtual std::string backend_id() const = 0;
    virtual int text_embedding_dim() const = 0;
    /// False for backends whose outputs are not bit-reproducible.
    virtual bool deterministic() const { return true; }

    /// Setup phase only; not safe to call concurrently with generation.
    virtual void register_token(const std::string& token_string, const Embedding& embedding) = 0;
    virtual bool has_token(const std::string& token_string) const = 0;

    virtual Image generate(const std::string& prompt, std::int64_t seed) const = 0;

    /// Loss and gradient with respect to `embedding` when the embedding stands in
    /// for "{token}" in `prompt_template` and `target` is the training image.
    virtual ObjectiveValue inversion_objective(const Eigen::VectorXd& embedding, const Image& target,
                                               const std::string& prompt_template,
                                               std::uint64_t noise_seed) const = 0;

    /// Embedding of an existing vocabulary word, used to initialize inversion.
    virtual Embedding word_embedding(std::string_view word) const = 0;
};

/// Joint image/text embedding model; outputs are unit vectors.
class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;

    virtual std::string backend_id() const = 0;
    virtual int dim() const = 0;
    virtual bool deterministic() const { return true; }

    virtual Eigen::VectorXd embed_image(const Image& image) const = 0;
    virtual Eigen::VectorXd embed_text(const std::string& text) const = 0;
};

/// Image classifier under evaluation.
class ClassifierBackend {
public:
    virtual ~ClassifierBackend() = default;

    virtual std::string model_id() const = 0;
    virtual int predict(const Image& image) const = 0;
};

/// Registers every token of a library with `backend`.
void register_library(GenerativeBackend& backend, const std::vector<ClassToken>& library);

}  // namespace dsi
