#include "dsi/inversion/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "dsi/core/fs_util.hpp"
#include "dsi/core/parallel.hpp"
#include "dsi/core/random.hpp"
#include "dsi/inversion/adamw.hpp"

namespace dsi {

namespace fs = std::filesystem;

std::vector<std::string> InversionConfig::default_templates() {
    return {
        "a photo of a {token}",
        "a rendering of a {token}",
        "a cropped photo of the {token}",
        "the photo of a {token}",
        "a close-up photo of a {token}",
        "a good photo of a {token}",
    };
}

void validate(const InversionConfig& config) {
    if (config.steps < 0) fail(ErrorCode::InvalidArgument, "steps must be >= 0");
    if (!(config.learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "learning_rate must be > 0");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0)) fail(ErrorCode::InvalidArgument, "beta1 must be in [0, 1)");
    if (!(config.beta2 >= 0.0 && config.beta2 < 1.0)) fail(ErrorCode::InvalidArgument, "beta2 must be in [0, 1)");
    if (!(config.weight_decay >= 0.0)) fail(ErrorCode::InvalidArgument, "weight_decay must be >= 0");
    if (config.template_set.empty()) fail(ErrorCode::InvalidArgument, "template_set is empty");
    for (const auto& tmpl : config.template_set) {
        const auto first = tmpl.find(kTokenPlaceholder);
        if (first == std::string::npos) fail(ErrorCode::PlaceholderMissing, "template '" + tmpl + "' has no {token}");
        if (tmpl.find(kTokenPlaceholder, first + 1) != std::string::npos) {
            fail(ErrorCode::PlaceholderDuplicated, "template '" + tmpl + "' repeats {token}");
        }
    }
}

StepSample sample_step(std::uint64_t seed, std::int64_t step, std::size_t n_images, std::size_t n_templates) {
    const auto counter = static_cast<std::uint64_t>(step);
    return StepSample{
        static_cast<std::size_t>(counter_hash(seed, 1, counter) % n_images),
        static_cast<std::size_t>(counter_hash(seed, 2, counter) % n_templates),
        counter_hash(seed, 3, counter),
    };
}

Embedding initial_embedding(const InversionConfig& config, const std::string& class_label,
                            const GenerativeBackend& backend) {
    const int dim = backend.text_embedding_dim();
    switch (config.init) {
        case InitKind::Zero:
            return Embedding::Zero(dim);
        case InitKind::RandomUnit: {
            SplitMix64 rng(splitmix64(config.seed ^ 0xA11CE));
            Eigen::VectorXd v(dim);
            for (int i = 0; i < dim; ++i) v[i] = rng.normal();
            return (v / v.norm()).cast<float>();
        }
        case InitKind::Word: {
            std::string word = config.init_word;
            if (word.empty()) {
                const auto space = class_label.find(' ');
                word = class_label.substr(0, space);
            }
            if (word.empty()) fail(ErrorCode::InvalidArgument, "no initializer word for '" + class_label + "'");
            Embedding v = backend.word_embedding(word);
            if (v.size() != dim) {
                fail(ErrorCode::DimensionMismatch, "word embedding of '" + word + "' has dimension " +
                                                       std::to_string(v.size()) + ", backend declares " +
                                                       std::to_string(dim));
            }
            return v;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown init kind");
}

ClassToken learn_token(int class_id, const std::string& class_label, std::span<const Image> images,
                       const GenerativeBackend& backend, const InversionConfig& config,
                       const StepObserver& observer) {
    validate(config);
    if (images.empty()) fail(ErrorCode::EmptyInput, "class '" + class_label + "' has no training images");

    const Embedding init = initial_embedding(config, class_label, backend);
    const int dim = backend.text_embedding_dim();

    Eigen::VectorXd params = init.cast<double>();
    AdamW<double> optimizer(dim, {config.learning_rate, config.beta1, config.beta2, config.weight_decay,
                                  config.epsilon});
    for (std::int64_t step = 0; step < config.steps; ++step) {
        const auto draw = sample_step(config.seed, step, images.size(), config.template_set.size());
        const auto value = backend.inversion_objective(params, images[draw.image_index],
                                                       config.template_set[draw.template_index], draw.noise_seed);
        if (!std::isfinite(value.loss)) {
            throw InversionDiverged(step, "non-finite loss at step " + std::to_string(step) + " for class '" +
                                              class_label + "'");
        }
        if (value.gradient.size() != dim) {
            fail(ErrorCode::DimensionMismatch, "backend returned a gradient of length " +
                                                   std::to_string(value.gradient.size()));
        }
        if (!value.gradient.allFinite()) {
            throw InversionDiverged(step, "non-finite gradient at step " + std::to_string(step) + " for class '" +
                                              class_label + "'");
        }
        if (observer) observer(step, value.loss);
        optimizer.step(params, value.gradient);
    }

    ClassToken token;
    token.class_id = class_id;
    token.class_label = class_label;
    token.token_string = make_token_string(config.dataset_slug, class_id);
    token.embedding = config.steps == 0 ? init : params.cast<float>().eval();
    token.provenance = TokenProvenance{config.steps, config.learning_rate, config.seed, backend.backend_id(),
                                       config.created_at.empty() ? utc_timestamp_now() : config.created_at};
    return token;
}

std::vector<DatasetClass> load_image_folder(const fs::path& root, const std::vector<std::string>& only) {
    if (!fs::is_directory(root)) fail(ErrorCode::NotFound, "dataset root " + root.string() + " is not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());

    auto label_of = [](std::string name) {
        std::replace(name.begin(), name.end(), '_', ' ');
        return name;
    };
    for (const auto& wanted : only) {
        const bool known = std::any_of(names.begin(), names.end(), [&](const std::string& n) {
            return n == wanted || label_of(n) == wanted;
        });
        if (!known) fail(ErrorCode::NotFound, "dataset has no class '" + wanted + "'");
    }

    std::vector<DatasetClass> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& name = names[i];
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end() &&
            std::find(only.begin(), only.end(), label_of(name)) == only.end()) {
            continue;
        }
        DatasetClass cls{static_cast<int>(i), label_of(name), {}};
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(root / name)) {
            if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) cls.images.push_back(read_ppm(file));
        out.push_back(std::move(cls));
    }
    return out;
}

TokenLearningResult learn_all_tokens(const std::vector<DatasetClass>& dataset, const GenerativeBackend& backend,
                                     const InversionConfig& config, std::size_t parallelism, FailurePolicy policy,
                                     const std::function<void(std::size_t, std::size_t)>& progress) {
    validate(config);
    std::vector<std::optional<ClassToken>> tokens(dataset.size());
    std::vector<std::optional<ClassFailure>> failures(dataset.size());
    std::atomic<bool> stop{false};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    parallel_for(dataset.size(), parallelism, [&](std::size_t i) {
        const auto& cls = dataset[i];
        if (stop) return;
        try {
            tokens[i] = learn_token(cls.class_id, cls.label, cls.images, backend, config);
        } catch (const Error& e) {
            failures[i] = ClassFailure{cls.class_id, cls.label, e.code(), e.what()};
            if (policy == FailurePolicy::FailFast) stop = true;
        } catch (const std::exception& e) {
            failures[i] = ClassFailure{cls.class_id, cls.label, ErrorCode::BackendFailure, e.what()};
            if (policy == FailurePolicy::FailFast) stop = true;
        }
        const auto n = ++done;
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(n, dataset.size());
        }
    });

    TokenLearningResult result;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (failures[i] && policy == FailurePolicy::FailFast) {
            fail(failures[i]->code, "class " + std::to_string(failures[i]->class_id) + " ('" + failures[i]->label +
                                        "'): " + failures[i]->message);
        }
        if (failures[i]) result.failures.push_back(*failures[i]);
        if (tokens[i]) result.library.push_back(std::move(*tokens[i]));
    }
    std::sort(result.library.begin(), result.library.end(),
              [](const ClassToken& a, const ClassToken& b) { return a.class_id < b.class_id; });
    std::sort(result.failures.begin(), result.failures.end(),
              [](const ClassFailure& a, const ClassFailure& b) { return a.class_id < b.class_id; });
    return result;
}

}  // namespace dsi
