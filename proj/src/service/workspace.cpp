#include "dsi/service/workspace.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <sstream>

#include "dsi/core/fs_util.hpp"
#include "dsi/core/records.hpp"
#include "dsi/core/token_library.hpp"
#include "dsi/error.hpp"

namespace dsi {

namespace fs = std::filesystem;

namespace {

const std::regex kVersionName(R"(v(\d{4,}))");

bool is_version_dir(const fs::directory_entry& entry) {
    return entry.is_directory() && std::regex_match(entry.path().filename().string(), kVersionName);
}

std::string version_name(std::size_t n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "v%04zu", n);
    return buf;
}

}  // namespace

std::vector<fs::path> snapshot_versions(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (is_version_dir(entry)) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return std::stoull(a.filename().string().substr(1)) < std::stoull(b.filename().string().substr(1));
    });
    return out;
}

std::optional<fs::path> latest_snapshot(const fs::path& dir) {
    auto versions = snapshot_versions(dir);
    if (versions.empty()) return std::nullopt;
    return versions.back();
}

FileSet read_snapshot(const fs::path& snapshot) {
    FileSet files;
    for (const auto& entry : fs::directory_iterator(snapshot)) {
        if (entry.is_regular_file()) files[entry.path().filename().string()] = read_text_file(entry.path());
    }
    return files;
}

fs::path commit_snapshot(const fs::path& dir, const FileSet& files) {
    const auto versions = snapshot_versions(dir);
    if (!versions.empty() && read_snapshot(versions.back()) == files) return versions.back();
    std::size_t next = 1;
    if (!versions.empty()) next = std::stoull(versions.back().filename().string().substr(1)) + 1;
    const fs::path target = dir / version_name(next);
    // Files land in a staging directory that is renamed into place in one
    // step, so a snapshot is either absent or complete.
    const fs::path staging = dir / (".staging-" + version_name(next));
    fs::remove_all(staging);
    fs::create_directories(staging);
    for (const auto& [name, contents] : files) write_file_atomic(staging / name, contents);
    fs::rename(staging, target);
    return target;
}

Workspace::Workspace(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

ShiftRegistry Workspace::registry() const {
    const auto latest = latest_snapshot(root_ / "registry");
    if (!latest) return default_shift_registry();
    return load_shift_registry(*latest / "registry.json");
}

fs::path Workspace::commit_registry(const ShiftRegistry& registry) const {
    return commit_snapshot(root_ / "registry", {{"registry.json", to_json(registry).dump(2) + "\n"}});
}

std::optional<fs::path> Workspace::tokens_dir() const { return latest_snapshot(root_ / "tokens"); }

std::vector<ClassToken> Workspace::tokens() const {
    const auto dir = tokens_dir();
    if (!dir) return {};
    return load_token_library(*dir);
}

fs::path Workspace::commit_tokens(const std::vector<ClassToken>& library) const {
    const fs::path scratch = root_ / "tokens" / ".scratch";
    fs::remove_all(scratch);
    save_token_library(library, scratch);
    const auto files = read_snapshot(scratch);
    fs::remove_all(scratch);
    return commit_snapshot(root_ / "tokens", files);
}

void Workspace::write_sidecars(const std::vector<CounterfactualSample>& samples) const {
    for (const auto& s : samples) {
        const fs::path path =
            root_ / "samples" / s.shift_name / std::to_string(s.class_id) / (s.sample_id + ".json");
        const std::string text = nlohmann::json(s).dump(2) + "\n";
        if (fs::exists(path)) {
            if (read_text_file(path) != text) {
                fail(ErrorCode::InvalidState, "refusing to overwrite sidecar " + path.string());
            }
            continue;
        }
        write_file_atomic(path, text);
    }
}

fs::path Workspace::batch_root(const std::string& shift_name, int class_id) const {
    return root_ / "batches" / shift_name / std::to_string(class_id);
}

bool Workspace::has_batch(const std::string& shift_name, int class_id) const {
    return latest_snapshot(batch_root(shift_name, class_id)).has_value();
}

std::vector<CounterfactualSample> Workspace::batch(const std::string& shift_name, int class_id) const {
    const auto latest = latest_snapshot(batch_root(shift_name, class_id));
    if (!latest) return {};
    return samples_from_jsonl(read_text_file(*latest / "samples.jsonl"));
}

fs::path Workspace::commit_batch(const std::string& shift_name, int class_id,
                                 const std::vector<CounterfactualSample>& samples) const {
    return commit_snapshot(batch_root(shift_name, class_id), {{"samples.jsonl", to_jsonl(samples)}});
}

std::vector<std::pair<std::string, int>> Workspace::batches() const {
    std::vector<std::pair<std::string, int>> out;
    const fs::path dir = root_ / "batches";
    if (!fs::is_directory(dir)) return out;
    for (const auto& shift : fs::directory_iterator(dir)) {
        if (!shift.is_directory()) continue;
        for (const auto& cls : fs::directory_iterator(shift.path())) {
            if (!cls.is_directory() || !latest_snapshot(cls.path())) continue;
            out.emplace_back(shift.path().filename().string(), std::stoi(cls.path().filename().string()));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::map<int, ClassThreshold> Workspace::class_thresholds() const {
    std::map<int, ClassThreshold> out;
    const auto latest = latest_snapshot(root_ / "thresholds");
    if (!latest) return out;
    for (const auto& t : read_json_file(*latest / "class_thresholds.json").get<std::vector<ClassThreshold>>()) {
        out[t.class_id] = t;
    }
    return out;
}

fs::path Workspace::commit_class_thresholds(const std::map<int, ClassThreshold>& thresholds) const {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& [id, t] : thresholds) doc.push_back(t);
    return commit_snapshot(root_ / "thresholds", {{"class_thresholds.json", doc.dump(2) + "\n"}});
}

std::optional<PredictionRun> Workspace::predictions(const std::string& model_id, const std::string& shift_name) const {
    const auto latest = latest_snapshot(root_ / "predictions" / model_id / shift_name);
    if (!latest) return std::nullopt;
    return read_prediction_run(*latest / "run.json");
}

fs::path Workspace::commit_predictions(const PredictionRun& run) const {
    const nlohmann::json manifest = {
        {"model_id", run.model_id}, {"shift", run.shift_name}, {"predictions", "predictions.csv"}};
    return commit_snapshot(root_ / "predictions" / run.model_id / run.shift_name,
                           {{"predictions.csv", predictions_csv(run.predictions)}, {"run.json", manifest.dump(2) + "\n"}});
}

fs::path Workspace::commit_reports(const FileSet& files) const { return commit_snapshot(root_ / "reports", files); }

std::string to_jsonl(const std::vector<CounterfactualSample>& samples) {
    std::string out;
    for (const auto& s : samples) out += nlohmann::json(s).dump() + "\n";
    return out;
}

std::vector<CounterfactualSample> samples_from_jsonl(const std::string& text) {
    std::vector<CounterfactualSample> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line).get<CounterfactualSample>());
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::ManifestMalformed, std::string("malformed sample record: ") + e.what());
        }
    }
    return out;
}

}  // namespace dsi
