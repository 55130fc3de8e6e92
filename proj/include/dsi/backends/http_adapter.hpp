#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "dsi/backends/contracts.hpp"

namespace httplib {
class Server;
}

namespace dsi {

// Wire format shared by the adapter client and server.
nlohmann::json image_to_json(const Image& image);
Image image_from_json(const nlohmann::json& j);

/// Exposes backends under `prefix` (e.g. "/api/backend"):
///   GET  {prefix}/info
///   POST {prefix}/register_token       {token_string, embedding}
///   POST {prefix}/generate             {prompt, seed}                -> image
///   POST {prefix}/inversion_objective  {embedding, image, prompt_template, noise_seed}
///   POST {prefix}/word_embedding       {word}
///   POST {prefix}/embed_image          {image}
///   POST {prefix}/embed_text           {text}
/// Either backend may be null; its routes then answer 404.
void mount_backend_routes(httplib::Server& server, const std::string& prefix,
                          std::shared_ptr<GenerativeBackend> generative,
                          std::shared_ptr<const EmbeddingBackend> embedding);

/// Client side of the routes above. `base_url` is e.g.
/// "http://127.0.0.1:8090/api/backend".
class HttpGenerativeBackend final : public GenerativeBackend {
public:
    explicit HttpGenerativeBackend(std::string base_url);

    std::string backend_id() const override { return backend_id_; }
    int text_embedding_dim() const override { return dim_; }
    bool deterministic() const override { return deterministic_; }

    void register_token(const std::string& token_string, const Embedding& embedding) override;
    bool has_token(const std::string& token_string) const override;
    Image generate(const std::string& prompt, std::int64_t seed) const override;
    ObjectiveValue inversion_objective(const Eigen::VectorXd& embedding, const Image& target,
                                       const std::string& prompt_template,
                                       std::uint64_t noise_seed) const override;
    Embedding word_embedding(std::string_view word) const override;

private:
    std::string base_url_;
    std::string backend_id_;
    int dim_ = 0;
    bool deterministic_ = true;
};

class HttpEmbeddingBackend final : public EmbeddingBackend {
public:
    explicit HttpEmbeddingBackend(std::string base_url);

    std::string backend_id() const override { return backend_id_; }
    int dim() const override { return dim_; }
    bool deterministic() const override { return deterministic_; }

    Eigen::VectorXd embed_image(const Image& image) const override;
    Eigen::VectorXd embed_text(const std::string& text) const override;

private:
    std::string base_url_;
    std::string backend_id_;
    int dim_ = 0;
    bool deterministic_ = true;
};

/// POSTs `body` to `base_url + path` and returns the parsed JSON response;
/// non-2xx answers raise BackendFailure.
nlohmann::json http_post_json(const std::string& base_url, const std::string& path, const nlohmann::json& body);
nlohmann::json http_get_json(const std::string& base_url, const std::string& path);

}  // namespace dsi
