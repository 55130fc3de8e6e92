#include "dsi/backends/http_adapter.hpp"

#include <httplib.h>

#include "dsi/error.hpp"

namespace dsi {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host:port
    std::string path;    // path prefix, no trailing slash
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::InvalidArgument, "adapter URL lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out{url.substr(0, path_start), path_start == std::string::npos ? "" : url.substr(path_start)};
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

nlohmann::json parse_response(const httplib::Result& result, const std::string& what) {
    if (!result) fail(ErrorCode::BackendFailure, what + ": " + httplib::to_string(result.error()));
    if (result->status < 200 || result->status >= 300) {
        fail(ErrorCode::BackendFailure, what + ": HTTP " + std::to_string(result->status) + " " + result->body);
    }
    try {
        return nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::BackendFailure, what + ": invalid JSON response");
    }
}

template <typename Vector>
nlohmann::json vector_to_json(const Vector& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void reply(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename Handler>
httplib::Server::Handler guarded(Handler&& handler) {
    return [handler = std::forward<Handler>(handler)](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const Error& e) {
            reply(res, {{"error", e.what()}, {"code", to_string(e.code())}}, 400);
        } catch (const std::exception& e) {
            reply(res, {{"error", e.what()}, {"code", "invalid_argument"}}, 400);
        }
    };
}

}  // namespace

nlohmann::json image_to_json(const Image& image) {
    return {{"width", image.width},
            {"height", image.height},
            {"rgb", std::vector<double>(image.rgb.data(), image.rgb.data() + image.rgb.size())}};
}

Image image_from_json(const nlohmann::json& j) {
    Image image(j.at("width").get<int>(), j.at("height").get<int>());
    const auto values = j.at("rgb").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != image.rgb.size()) {
        fail(ErrorCode::DimensionMismatch, "image payload size does not match its geometry");
    }
    std::copy(values.begin(), values.end(), image.rgb.data());
    return image;
}

nlohmann::json http_post_json(const std::string& base_url, const std::string& path, const nlohmann::json& body) {
    const auto url = split_url(base_url);
    httplib::Client client(url.origin);
    client.set_read_timeout(300, 0);
    return parse_response(client.Post(url.path + path, body.dump(), "application/json"), "POST " + path);
}

nlohmann::json http_get_json(const std::string& base_url, const std::string& path) {
    const auto url = split_url(base_url);
    httplib::Client client(url.origin);
    return parse_response(client.Get(url.path + path), "GET " + path);
}

void mount_backend_routes(httplib::Server& server, const std::string& prefix,
                          std::shared_ptr<GenerativeBackend> generative,
                          std::shared_ptr<const EmbeddingBackend> embedding) {
    server.Get(prefix + "/info", guarded([=](const httplib::Request&, httplib::Response& res) {
                   nlohmann::json info = nlohmann::json::object();
                   if (generative) {
                       info["generative"] = {{"backend_id", generative->backend_id()},
                                             {"text_embedding_dim", generative->text_embedding_dim()},
                                             {"deterministic", generative->deterministic()}};
                   }
                   if (embedding) {
                       info["embedding"] = {{"backend_id", embedding->backend_id()},
                                            {"dim", embedding->dim()},
                                            {"deterministic", embedding->deterministic()}};
                   }
                   reply(res, info);
               }));

    auto need_generative = [generative](httplib::Response& res) {
        if (!generative) reply(res, {{"error", "no generative backend"}, {"code", "not_found"}}, 404);
        return generative != nullptr;
    };
    auto need_embedding = [embedding](httplib::Response& res) {
        if (!embedding) reply(res, {{"error", "no embedding backend"}, {"code", "not_found"}}, 404);
        return embedding != nullptr;
    };

    server.Post(prefix + "/register_token", guarded([=](const httplib::Request& req, httplib::Response& res) {
                    if (!need_generative(res)) return;
                    const auto body = nlohmann::json::parse(req.body);
                    const Embedding e = vector_from_json(body.at("embedding")).cast<float>();
                    generative->register_token(body.at("token_string").get<std::string>(), e);
                    reply(res, {{"ok", true}});
                }));
    server.Post(prefix + "/has_token", guarded([=](const httplib::Request& req, httplib::Response& res) {
                    if (!need_generative(res)) return;
                    const auto body = nlohmann::json::parse(req.body);
                    reply(res, {{"registered", generative->has_token(body.at("token_string").get<std::string>())}});
                }));
    server.Post(prefix + "/generate", guarded([=](const httplib::Request& req, httplib::Response& res) {
                    if (!need_generative(res)) return;
                    const auto body = nlohmann::json::parse(req.body);
                    reply(res, image_to_json(generative->generate(body.at("prompt").get<std::string>(),
                                                                  body.at("seed").get<std::int64_t>())));
                }));
    server.Post(prefix + "/inversion_objective",
                guarded([=](const httplib::Request& req, httplib::Response& res) {
                    if (!need_generative(res)) return;
                    const auto body = nlohmann::json::parse(req.body);
                    const auto value = generative->inversion_objective(
                        vector_from_json(body.at("embedding")), image_from_json(body.at("image")),
                        body.at("prompt_template").get<std::string>(), body.at("noise_seed").get<std::uint64_t>());
                    reply(res, {{"loss", value.loss}, {"gradient", vector_to_json(value.gradient)}});
                }));
    server.Post(prefix + "/word_embedding", guarded([=](const httplib::Request& req, httplib::Response& res) {
                    if (!need_generative(res)) return;
                    const auto body = nlohmann::json::parse(req.body);
                    reply(res, {{"embedding",
                                 vector_to_json(generative->word_embedding(body.at("word").get<std::string>()))}});
                }));
    server.Post(prefix + "/embed_image", guarded([=](const httplib::Request& req, httplib::Response& res) {
                    if (!need_embedding(res)) return;
                    const auto body = nlohmann::json::parse(req.body);
                    reply(res, {{"embedding", vector_to_json(embedding->embed_image(image_from_json(body.at("image"))))}});
                }));
    server.Post(prefix + "/embed_text", guarded([=](const httplib::Request& req, httplib::Response& res) {
                    if (!need_embedding(res)) return;
                    const auto body = nlohmann::json::parse(req.body);
                    reply(res, {{"embedding", vector_to_json(embedding->embed_text(body.at("text").get<std::string>()))}});
                }));
}

HttpGenerativeBackend::HttpGenerativeBackend(std::string base_url) : base_url_(std::move(base_url)) {
    const auto info = http_get_json(base_url_, "/info");
    if (!info.contains("generative")) fail(ErrorCode::BackendFailure, base_url_ + " exposes no generative backend");
    const auto& g = info.at("generative");
    backend_id_ = g.at("backend_id").get<std::string>();
    dim_ = g.at("text_embedding_dim").get<int>();
    deterministic_ = g.value("deterministic", true);
}

void HttpGenerativeBackend::register_token(const std::string& token_string, const Embedding& embedding) {
    http_post_json(base_url_, "/register_token", {{"token_string", token_string}, {"embedding", vector_to_json(embedding)}});
}

bool HttpGenerativeBackend::has_token(const std::string& token_string) const {
    return http_post_json(base_url_, "/has_token", {{"token_string", token_string}}).at("registered").get<bool>();
}

Image HttpGenerativeBackend::generate(const std::string& prompt, std::int64_t seed) const {
    return image_from_json(http_post_json(base_url_, "/generate", {{"prompt", prompt}, {"seed", seed}}));
}

ObjectiveValue HttpGenerativeBackend::inversion_objective(const Eigen::VectorXd& embedding, const Image& target,
                                                          const std::string& prompt_template,
                                                          std::uint64_t noise_seed) const {
    const auto body = http_post_json(base_url_, "/inversion_objective",
                                     {{"embedding", vector_to_json(embedding)},
                                      {"image", image_to_json(target)},
                                      {"prompt_template", prompt_template},
                                      {"noise_seed", noise_seed}});
    return {body.at("loss").get<double>(), vector_from_json(body.at("gradient"))};
}

Embedding HttpGenerativeBackend::word_embedding(std::string_view word) const {
    const auto body = http_post_json(base_url_, "/word_embedding", {{"word", std::string(word)}});
    return vector_from_json(body.at("embedding")).cast<float>();
}

HttpEmbeddingBackend::HttpEmbeddingBackend(std::string base_url) : base_url_(std::move(base_url)) {
    const auto info = http_get_json(base_url_, "/info");
    if (!info.contains("embedding")) fail(ErrorCode::BackendFailure, base_url_ + " exposes no embedding backend");
    const auto& e = info.at("embedding");
    backend_id_ = e.at("backend_id").get<std::string>();
    dim_ = e.at("dim").get<int>();
    deterministic_ = e.value("deterministic", true);
}

Eigen::VectorXd HttpEmbeddingBackend::embed_image(const Image& image) const {
    return vector_from_json(http_post_json(base_url_, "/embed_image", {{"image", image_to_json(image)}}).at("embedding"));
}

Eigen::VectorXd HttpEmbeddingBackend::embed_text(const std::string& text) const {
    return vector_from_json(http_post_json(base_url_, "/embed_text", {{"text", text}}).at("embedding"));
}

}  // namespace dsi
