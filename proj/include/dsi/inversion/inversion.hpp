#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsi/backends/contracts.hpp"
#include "dsi/core/types.hpp"
#include "dsi/error.hpp"
#include "dsi/image.hpp"

namespace dsi {

enum class InitKind {
    Word,        // word embedding of `init_word` (or of the class label's first word)
    Zero,
    RandomUnit,  // unit vector drawn from `seed`
};

/// Defaults follow the published textual-inversion schedule: 3000 steps of
/// Adam at a constant 5e-4, betas 0.9/0.999, weight decay 1e-2.
struct InversionConfig {
    std::int64_t steps = 3000;
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 1e-2;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    InitKind init = InitKind::Word;
    std::string init_word;  // empty: first word of the class label
    std::vector<std::string> template_set = default_templates();
    std::string dataset_slug = "class";
    /// Provenance timestamp; empty means "now" (SOURCE_DATE_EPOCH honoured).
    std::string created_at;

    static std::vector<std::string> default_templates();
};

void validate(const InversionConfig& config);

/// Raised when the objective produces a non-finite loss or gradient.
class InversionDiverged : public Error {
public:
    InversionDiverged(std::int64_t step, const std::string& message)
        : Error(ErrorCode::NonFinite, message), step_(step) {}
    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

/// Per-step draw of (image, template, noise seed); a pure function of
/// (seed, step) so runs replay exactly.
struct StepSample {
    std::size_t image_index;
    std::size_t template_index;
    std::uint64_t noise_seed;
};
StepSample sample_step(std::uint64_t seed, std::int64_t step, std::size_t n_images, std::size_t n_templates);

/// Initial embedding for a class, as float so steps = 0 returns it bit-exactly.
Embedding initial_embedding(const InversionConfig& config, const std::string& class_label,
                            const GenerativeBackend& backend);

using StepObserver = std::function<void(std::int64_t step, double loss)>;

/// Learns one class token. Deterministic in (images, config, backend).
ClassToken learn_token(int class_id, const std::string& class_label, std::span<const Image> images,
                       const GenerativeBackend& backend, const InversionConfig& config,
                       const StepObserver& observer = {});

struct DatasetClass {
    int class_id = 0;
    std::string label;
    std::vector<Image> images;
};

/// ImageFolder layout: one sub-directory per class holding .ppm images.
/// class_id is the index of the directory in sorted order over ALL class
/// directories; the label is the directory name with '_' read as ' '.
/// `only` restricts the result to the named directories (names or labels).
std::vector<DatasetClass> load_image_folder(const std::filesystem::path& root,
                                            const std::vector<std::string>& only = {});

enum class FailurePolicy { FailFast, ContinueAndReport };

struct ClassFailure {
    int class_id = 0;
    std::string label;
    ErrorCode code = ErrorCode::InvalidArgument;
    std::string message;
};

struct TokenLearningResult {
    std::vector<ClassToken> library;  // ordered by class_id
    std::vector<ClassFailure> failures;
};

/// Learns every class independently; the output does not depend on
/// `parallelism` or scheduling. Under FailFast the failure of the first
/// class (in input order) that failed is rethrown.
TokenLearningResult learn_all_tokens(const std::vector<DatasetClass>& dataset, const GenerativeBackend& backend,
                                     const InversionConfig& config, std::size_t parallelism = 1,
                                     FailurePolicy policy = FailurePolicy::ContinueAndReport,
                                     const std::function<void(std::size_t done, std::size_t total)>& progress = {});

}  // namespace dsi
