#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dsi/core/shift_registry.hpp"
#include "dsi/core/types.hpp"
#include "dsi/evaluation/report.hpp"
#include "dsi/generation/image_store.hpp"

namespace dsi {

/// A snapshot: file name -> contents.
using FileSet = std::map<std::string, std::string>;

/// Versioned snapshot directories: `dir/v0001`, `dir/v0002`, ...
/// A committed snapshot is never modified; committing contents equal to the
/// latest snapshot is a no-op.
std::vector<std::filesystem::path> snapshot_versions(const std::filesystem::path& dir);
std::optional<std::filesystem::path> latest_snapshot(const std::filesystem::path& dir);
std::filesystem::path commit_snapshot(const std::filesystem::path& dir, const FileSet& files);
FileSet read_snapshot(const std::filesystem::path& snapshot);

/// On-disk artifact store of one pipeline run.
///
///   registry/vNNNN/registry.json
///   tokens/vNNNN/{manifest.json, token_*.emb}
///   samples/<shift>/<class>/<sample_id>.{ppm,json}      write-once images and sidecars
///   batches/<shift>/<class>/vNNNN/samples.jsonl          batch state (generated, scored, filtered)
///   thresholds/vNNNN/class_thresholds.json
///   predictions/<model>/<shift>/vNNNN/{predictions.csv, run.json}
///   reports/vNNNN/{<shift>.csv, <shift>.summary.json, <shift>.scatter.svg, impact_vs_slope.svg, index.json}
///   audit/{verdicts,decisions}.jsonl                     append-only
class Workspace {
public:
    explicit Workspace(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Latest registry; the default registry when none was committed.
    ShiftRegistry registry() const;
    std::filesystem::path commit_registry(const ShiftRegistry& registry) const;

    /// Latest token library; empty when none was committed.
    std::vector<ClassToken> tokens() const;
    std::optional<std::filesystem::path> tokens_dir() const;
    std::filesystem::path commit_tokens(const std::vector<ClassToken>& library) const;

    DirectoryImageStore image_store() const { return DirectoryImageStore(root_ / "samples"); }
    /// One JSON record per generated sample next to its image.
    void write_sidecars(const std::vector<CounterfactualSample>& samples) const;

    std::vector<CounterfactualSample> batch(const std::string& shift_name, int class_id) const;
    bool has_batch(const std::string& shift_name, int class_id) const;
    std::filesystem::path commit_batch(const std::string& shift_name, int class_id,
                                       const std::vector<CounterfactualSample>& samples) const;
    /// Every (shift, class) with a committed batch, sorted.
    std::vector<std::pair<std::string, int>> batches() const;

    std::map<int, ClassThreshold> class_thresholds() const;
    std::filesystem::path commit_class_thresholds(const std::map<int, ClassThreshold>& thresholds) const;

    std::optional<PredictionRun> predictions(const std::string& model_id, const std::string& shift_name) const;
    std::filesystem::path commit_predictions(const PredictionRun& run) const;

    std::optional<std::filesystem::path> reports_dir() const { return latest_snapshot(root_ / "reports"); }
    std::filesystem::path commit_reports(const FileSet& files) const;

    std::filesystem::path verdict_log() const { return root_ / "audit" / "verdicts.jsonl"; }
    std::filesystem::path decision_log() const { return root_ / "audit" / "decisions.jsonl"; }

private:
    std::filesystem::path batch_root(const std::string& shift_name, int class_id) const;

    std::filesystem::path root_;
};

std::string to_jsonl(const std::vector<CounterfactualSample>& samples);
std::vector<CounterfactualSample> samples_from_jsonl(const std::string& text);

}  // namespace dsi
