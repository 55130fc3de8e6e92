#include "dsi/backends/conformance.hpp"

#include <cmath>
#include <sstream>

#include "dsi/core/random.hpp"
#include "dsi/error.hpp"

namespace dsi {

bool ConformanceReport::passed() const {
    for (const auto& check : checks) {
        if (!check.passed) return false;
    }
    return true;
}

std::string ConformanceReport::summary() const {
    std::ostringstream out;
    for (const auto& check : checks) {
        out << (check.passed ? "PASS " : "FAIL ") << backend_id << ": " << check.name;
        if (!check.detail.empty()) out << " (" << check.detail << ")";
        out << '\n';
    }
    return out.str();
}

namespace {

Image probe_image(int width, int height, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Image image(width, height);
    for (Eigen::Index i = 0; i < image.rgb.size(); ++i) image.rgb.data()[i] = rng.uniform();
    return image;
}

template <typename F>
void run_check(ConformanceReport& report, const std::string& name, F&& body) {
    ConformanceCheck check{name, false, {}};
    try {
        check.detail = body();
        check.passed = check.detail.empty();
    } catch (const std::exception& e) {
        check.detail = std::string("threw: ") + e.what();
    }
    report.checks.push_back(std::move(check));
}

}  // namespace

ConformanceReport check_generative_backend(GenerativeBackend& backend, std::uint64_t seed) {
    ConformanceReport report{backend.backend_id(), {}};
    const int dim = backend.text_embedding_dim();
    const std::string token = "<conformance-0>";
    const std::string prompt = "A photo of a " + token;

    run_check(report, "declares positive text_embedding_dim",
              [&] { return dim > 0 ? std::string{} : "dim = " + std::to_string(dim); });

    SplitMix64 rng(seed);
    Embedding probe(std::max(dim, 0));
    for (int i = 0; i < dim; ++i) probe[i] = static_cast<float>(0.5 * rng.normal());

    run_check(report, "register_token accepts a probe token", [&] {
        backend.register_token(token, probe);
        return backend.has_token(token) ? std::string{} : "token not visible after registration";
    });

    Image first;
    run_check(report, "generate returns a finite non-empty image", [&] {
        first = backend.generate(prompt, 7);
        if (first.width <= 0 || first.height <= 0) return std::string("empty image");
        return first.rgb.allFinite() ? std::string{} : "non-finite pixels";
    });
    if (backend.deterministic()) {
        run_check(report, "generate is deterministic per (prompt, seed)", [&] {
            return backend.generate(prompt, 7) == first ? std::string{} : "outputs differ";
        });
    }

    run_check(report, "word_embedding has the declared dimension", [&] {
        const auto w = backend.word_embedding("object");
        if (w.size() != dim) return "length " + std::to_string(w.size());
        return w.allFinite() ? std::string{} : "non-finite components";
    });

    run_check(report, "inversion_objective: finite loss >= 0, finite gradient of declared length", [&] {
        const Image target = first.width > 0 ? first : probe_image(32, 32, seed);
        for (int trial = 0; trial < 3; ++trial) {
            Eigen::VectorXd v(dim);
            for (int i = 0; i < dim; ++i) v[i] = rng.normal();
            const auto value = backend.inversion_objective(v, target, "a photo of a {token}", rng.next());
            if (!std::isfinite(value.loss) || value.loss < 0.0) return "loss " + std::to_string(value.loss);
            if (value.gradient.size() != dim) return "gradient length " + std::to_string(value.gradient.size());
            if (!value.gradient.allFinite()) return std::string("non-finite gradient");
        }
        return std::string{};
    });
    if (backend.deterministic()) {
        run_check(report, "inversion_objective is replayable per noise_seed", [&] {
            const Image target = first.width > 0 ? first : probe_image(32, 32, seed);
            const Eigen::VectorXd v = probe.cast<double>();
            const auto a = backend.inversion_objective(v, target, "a photo of a {token}", 11);
            const auto b = backend.inversion_objective(v, target, "a photo of a {token}", 11);
            return (a.loss == b.loss && a.gradient == b.gradient) ? std::string{} : "outputs differ";
        });
    }
    return report;
}

ConformanceReport check_embedding_backend(const EmbeddingBackend& backend, std::uint64_t seed) {
    ConformanceReport report{backend.backend_id(), {}};
    const int dim = backend.dim();
    const std::vector<std::string> texts = {"a photo of a plate", "", "zzzz unknown words", "a photo in the snow"};

    auto check_vector = [&](const Eigen::VectorXd& v) -> std::string {
        if (v.size() != dim) return "length " + std::to_string(v.size());
        if (!v.allFinite()) return "non-finite components";
        if (std::abs(v.norm() - 1.0) > 1e-6) return "norm " + std::to_string(v.norm());
        return {};
    };

    run_check(report, "embed_text returns unit vectors of the declared dimension", [&] {
        for (const auto& text : texts) {
            if (auto problem = check_vector(backend.embed_text(text)); !problem.empty()) {
                return "'" + text + "': " + problem;
            }
        }
        return std::string{};
    });
    run_check(report, "embed_image returns unit vectors of the declared dimension", [&] {
        for (std::uint64_t i = 0; i < 4; ++i) {
            if (auto problem = check_vector(backend.embed_image(probe_image(32, 32, seed + i))); !problem.empty()) {
                return problem;
            }
        }
        Image black(16, 16);
        return check_vector(backend.embed_image(black));
    });
    if (backend.deterministic()) {
        run_check(report, "embeddings are deterministic", [&] {
            const Image image = probe_image(32, 32, seed);
            if (backend.embed_image(image) != backend.embed_image(image)) return std::string("image outputs differ");
            if (backend.embed_text(texts[0]) != backend.embed_text(texts[0])) return std::string("text outputs differ");
            return std::string{};
        });
    }
    return report;
}

}  // namespace dsi
