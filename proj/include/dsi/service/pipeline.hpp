#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsi/backends/contracts.hpp"
#include "dsi/filtering/calibration.hpp"
#include "dsi/inversion/inversion.hpp"
#include "dsi/service/workspace.hpp"

namespace dsi {

// Parameters of the pipeline operations. The JSON readers are what both the
// HTTP handlers and the CLI go through; they reject bad input with a message
// that names the field.

struct LearnParams {
    std::filesystem::path dataset_root;
    std::vector<std::string> classes;  // empty: every class directory
    std::int64_t steps = 3000;
    double learning_rate = 5e-4;
    std::uint64_t seed = 0;
    InitKind init = InitKind::Word;
    std::string created_at;
};

struct GenerateParams {
    std::vector<int> class_ids;  // empty: every class with a token
    std::vector<std::string> shifts;
    std::int64_t n = 1;
    std::int64_t seed = 0;
};

/// Selects committed batches; empty lists select everything.
struct BatchSelection {
    std::vector<int> class_ids;
    std::vector<std::string> shifts;
};

struct CalibrateClassParams {
    std::filesystem::path dataset_root;
    std::vector<std::string> classes;
    double percentile = 20.0;
};

struct FilterParams {
    BatchSelection selection;
    std::optional<std::filesystem::path> class_thresholds;  // imported before filtering
};

struct EvaluateParams {
    std::vector<std::string> shifts;  // empty: every non-base shift with batches
    std::string classifiers = "toy-sweep";
    std::vector<std::filesystem::path> prediction_manifests;  // used instead of classifiers when non-empty
    int min_count = 5;
};

LearnParams learn_params_from_json(const nlohmann::json& j);
GenerateParams generate_params_from_json(const nlohmann::json& j);
BatchSelection batch_selection_from_json(const nlohmann::json& j);
CalibrateClassParams calibrate_class_params_from_json(const nlohmann::json& j);
FilterParams filter_params_from_json(const nlohmann::json& j);
EvaluateParams evaluate_params_from_json(const nlohmann::json& j);

InitKind parse_init_kind(const std::string& text);

using Progress = std::function<void(double fraction)>;

/// The pipeline over one workspace. Mutating operations are serialized.
class Pipeline {
public:
    Pipeline(Workspace workspace, std::shared_ptr<GenerativeBackend> generative,
             std::shared_ptr<const EmbeddingBackend> embedding, std::size_t parallelism = 1);

    const Workspace& workspace() const { return workspace_; }

    // Synchronous checks against the workspace state.
    void validate(const LearnParams& p) const;
    void validate(const GenerateParams& p) const;
    void validate(const BatchSelection& p) const;
    void validate(const CalibrateClassParams& p) const;
    void validate(const FilterParams& p) const;
    void validate(const EvaluateParams& p) const;

    nlohmann::json import_registry(const std::filesystem::path& path);
    nlohmann::json learn_tokens(const LearnParams& p, const Progress& progress = {});
    nlohmann::json generate(const GenerateParams& p, const Progress& progress = {});
    nlohmann::json score(const BatchSelection& p, const Progress& progress = {});
    nlohmann::json calibrate_class(const CalibrateClassParams& p, const Progress& progress = {});
    nlohmann::json filter(const FilterParams& p, const Progress& progress = {});
    nlohmann::json evaluate(const EvaluateParams& p, const Progress& progress = {});

    /// Session over every scored sample of the shift in the workspace.
    std::unique_ptr<ShiftCalibrationSession> open_calibration(const std::string& shift_name,
                                                              std::vector<double> grid = default_percentile_grid(),
                                                              std::size_t inspect_count = kDefaultInspectionCount) const;
    /// Submits a verdict, appends it to the audit log and, when the session
    /// reaches a threshold, commits a registry version carrying it.
    nlohmann::json record_decision(ShiftCalibrationSession& session, InspectionVerdict verdict);
    nlohmann::json calibrate_shift(const std::string& shift_name, const std::vector<double>& grid,
                                   std::size_t inspect_count, const Inspector& inspector);

    // Read side.
    nlohmann::json tokens_json() const;
    nlohmann::json registry_json() const;
    nlohmann::json samples_json(std::optional<int> class_id, std::optional<std::string> shift_name,
                                std::optional<bool> kept) const;
    nlohmann::json reports_json() const;
    /// Path of the stored image of a sample.
    std::filesystem::path image_path(const std::string& sample_id) const;

private:
    std::vector<std::pair<std::string, int>> select(const BatchSelection& p) const;
    std::string class_label(const std::vector<ClassToken>& library, int class_id) const;

    Workspace workspace_;
    std::shared_ptr<GenerativeBackend> generative_;
    std::shared_ptr<const EmbeddingBackend> embedding_;
    std::size_t parallelism_;
    std::mutex write_mutex_;
};

nlohmann::json session_state_json(const ShiftCalibrationSession& session);

}  // namespace dsi
