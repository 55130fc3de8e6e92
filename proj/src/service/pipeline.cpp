#include "dsi/service/pipeline.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "dsi/backends/toy_backends.hpp"
#include "dsi/core/fs_util.hpp"
#include "dsi/core/parallel.hpp"
#include "dsi/core/records.hpp"
#include "dsi/core/token_library.hpp"
#include "dsi/evaluation/metrics.hpp"
#include "dsi/evaluation/report.hpp"
#include "dsi/filtering/filtering.hpp"
#include "dsi/generation/generation.hpp"

namespace dsi {

namespace fs = std::filesystem;

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* name, T fallback) {
    if (!j.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
    if (!j.contains(name) || j.at(name).is_null()) return fallback;
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::InvalidArgument, std::string("field '") + name + "': wrong type");
    }
}

void require(bool ok, const std::string& field_name, const std::string& message) {
    if (!ok) fail(ErrorCode::InvalidArgument, "field '" + field_name + "': " + message);
}

nlohmann::json decision_json(const FilterDecision& d, const std::string& shift_name, int class_id) {
    nlohmann::json j = {{"sample_id", d.sample_id}, {"shift", shift_name},     {"class_id", class_id},
                        {"sim_class", d.sim_class}, {"sim_shift", nullptr},    {"tau_class", d.tau_class},
                        {"tau_shift", nullptr},     {"kept", d.kept}};
    if (d.sim_shift) j["sim_shift"] = *d.sim_shift;
    if (d.tau_shift) j["tau_shift"] = *d.tau_shift;
    return j;
}

void report(const Progress& progress, double fraction) {
    if (progress) progress(fraction);
}

}  // namespace

InitKind parse_init_kind(const std::string& text) {
    if (text == "word") return InitKind::Word;
    if (text == "zero") return InitKind::Zero;
    if (text == "random") return InitKind::RandomUnit;
    fail(ErrorCode::InvalidArgument, "field 'init': expected word, zero or random");
}

LearnParams learn_params_from_json(const nlohmann::json& j) {
    LearnParams p;
    p.dataset_root = field<std::string>(j, "dataset_root", "");
    p.classes = field<std::vector<std::string>>(j, "classes", {});
    p.steps = field<std::int64_t>(j, "steps", p.steps);
    p.learning_rate = field<double>(j, "lr", p.learning_rate);
    p.seed = field<std::uint64_t>(j, "seed", p.seed);
    p.init = parse_init_kind(field<std::string>(j, "init", "word"));
    p.created_at = field<std::string>(j, "created_at", "");
    require(!p.dataset_root.empty(), "dataset_root", "required");
    require(p.steps >= 0, "steps", "must be >= 0");
    require(p.learning_rate > 0.0, "lr", "must be > 0");
    return p;
}

GenerateParams generate_params_from_json(const nlohmann::json& j) {
    GenerateParams p;
    p.class_ids = field<std::vector<int>>(j, "classes", {});
    if (j.is_object() && j.contains("class")) p.class_ids.push_back(field<int>(j, "class", 0));
    p.shifts = field<std::vector<std::string>>(j, "shifts", {});
    if (j.is_object() && j.contains("shift")) p.shifts.push_back(field<std::string>(j, "shift", ""));
    p.n = field<std::int64_t>(j, "n", p.n);
    p.seed = field<std::int64_t>(j, "seed", p.seed);
    require(!p.shifts.empty(), "shift", "required");
    require(p.n >= 1, "n", "must be >= 1");
    require(p.seed >= 0, "seed", "must be >= 0");
    return p;
}

BatchSelection batch_selection_from_json(const nlohmann::json& j) {
    BatchSelection p;
    p.class_ids = field<std::vector<int>>(j, "classes", {});
    if (j.is_object() && j.contains("class")) p.class_ids.push_back(field<int>(j, "class", 0));
    p.shifts = field<std::vector<std::string>>(j, "shifts", {});
    if (j.is_object() && j.contains("shift")) p.shifts.push_back(field<std::string>(j, "shift", ""));
    return p;
}

CalibrateClassParams calibrate_class_params_from_json(const nlohmann::json& j) {
    CalibrateClassParams p;
    p.dataset_root = field<std::string>(j, "dataset_root", "");
    p.classes = field<std::vector<std::string>>(j, "classes", {});
    p.percentile = field<double>(j, "percentile", p.percentile);
    require(!p.dataset_root.empty(), "dataset_root", "required");
    require(p.percentile > 0.0 && p.percentile <= 100.0, "percentile", "must be in (0, 100]");
    return p;
}

FilterParams filter_params_from_json(const nlohmann::json& j) {
    FilterParams p;
    p.selection = batch_selection_from_json(j);
    const auto path = field<std::string>(j, "class_thresholds", "");
    if (!path.empty()) p.class_thresholds = path;
    return p;
}

EvaluateParams evaluate_params_from_json(const nlohmann::json& j) {
    EvaluateParams p;
    p.shifts = field<std::vector<std::string>>(j, "shifts", {});
    p.classifiers = field<std::string>(j, "classifiers", p.classifiers);
    for (const auto& s : field<std::vector<std::string>>(j, "predictions", {})) p.prediction_manifests.emplace_back(s);
    p.min_count = field<int>(j, "min_count", p.min_count);
    require(p.min_count >= 1, "min_count", "must be >= 1");
    return p;
}

Pipeline::Pipeline(Workspace workspace, std::shared_ptr<GenerativeBackend> generative,
                   std::shared_ptr<const EmbeddingBackend> embedding, std::size_t parallelism)
    : workspace_(std::move(workspace)),
      generative_(std::move(generative)),
      embedding_(std::move(embedding)),
      parallelism_(std::max<std::size_t>(parallelism, 1)) {}

void Pipeline::validate(const LearnParams& p) const {
    require(fs::is_directory(p.dataset_root), "dataset_root", "not a directory: " + p.dataset_root.string());
    require(p.steps >= 0, "steps", "must be >= 0");
    require(p.learning_rate > 0.0, "lr", "must be > 0");
}

void Pipeline::validate(const GenerateParams& p) const {
    const auto registry = workspace_.registry();
    const auto library = workspace_.tokens();
    require(!library.empty(), "classes", "the workspace has no tokens; run learn-tokens first");
    std::vector<int> ids = p.class_ids;
    if (ids.empty()) {
        for (const auto& t : library) ids.push_back(t.class_id);
    }
    require(!p.shifts.empty(), "shift", "required");
    for (const auto& shift : p.shifts) {
        for (int id : ids) dsi::validate(GenerationRequest{id, shift, p.n, p.seed}, registry, library);
    }
}

void Pipeline::validate(const BatchSelection& p) const {
    const auto registry = workspace_.registry();
    for (const auto& s : p.shifts) require(registry.contains(s), "shift", "unknown shift '" + s + "'");
    require(!select(p).empty(), "shift", "no generated batches match the selection");
}

void Pipeline::validate(const CalibrateClassParams& p) const {
    require(fs::is_directory(p.dataset_root), "dataset_root", "not a directory: " + p.dataset_root.string());
    require(p.percentile > 0.0 && p.percentile <= 100.0, "percentile", "must be in (0, 100]");
}

void Pipeline::validate(const FilterParams& p) const {
    validate(p.selection);
    if (p.class_thresholds) {
        require(fs::exists(*p.class_thresholds), "class_thresholds", "no such file");
    }
}

void Pipeline::validate(const EvaluateParams& p) const {
    const auto registry = workspace_.registry();
    for (const auto& s : p.shifts) {
        require(registry.contains(s), "shifts", "unknown shift '" + s + "'");
        require(s != kBaseShift, "shifts", "the base shift is the reference, not a shift to evaluate");
    }
    if (p.prediction_manifests.empty()) {
        require(p.classifiers == "toy-sweep", "classifiers", "only 'toy-sweep' is built in");
    } else {
        for (const auto& m : p.prediction_manifests) require(fs::exists(m), "predictions", "no such file: " + m.string());
    }
}

nlohmann::json Pipeline::import_registry(const fs::path& path) {
    std::lock_guard lock(write_mutex_);
    const auto registry = load_shift_registry(path);
    const auto version = workspace_.commit_registry(registry);
    return {{"registry", fs::relative(version, workspace_.root()).string()}};
}

nlohmann::json Pipeline::learn_tokens(const LearnParams& p, const Progress& progress) {
    validate(p);
    std::lock_guard lock(write_mutex_);
    const auto dataset = load_image_folder(p.dataset_root, p.classes);
    InversionConfig config;
    config.steps = p.steps;
    config.learning_rate = p.learning_rate;
    config.seed = p.seed;
    config.init = p.init;
    config.created_at = p.created_at;
    const auto result =
        learn_all_tokens(dataset, *generative_, config, parallelism_, FailurePolicy::FailFast,
                         [&](std::size_t done, std::size_t total) { report(progress, double(done) / double(total)); });
    std::map<int, ClassToken> merged;
    for (auto& t : workspace_.tokens()) merged[t.class_id] = std::move(t);
    for (const auto& t : result.library) merged[t.class_id] = t;
    std::vector<ClassToken> library;
    for (auto& [id, t] : merged) library.push_back(std::move(t));
    const auto version = workspace_.commit_tokens(library);
    nlohmann::json learned = nlohmann::json::array();
    for (const auto& t : result.library) {
        learned.push_back({{"class_id", t.class_id}, {"class_label", t.class_label}, {"token_string", t.token_string}});
    }
    return {{"result_ref", fs::relative(version, workspace_.root()).string()}, {"learned", learned}};
}

nlohmann::json Pipeline::generate(const GenerateParams& p, const Progress& progress) {
    validate(p);
    std::lock_guard lock(write_mutex_);
    const auto registry = workspace_.registry();
    const auto library = workspace_.tokens();
    register_library(*generative_, library);
    std::vector<int> ids = p.class_ids;
    if (ids.empty()) {
        for (const auto& t : library) ids.push_back(t.class_id);
    }
    auto store = workspace_.image_store();
    nlohmann::json samples = nlohmann::json::array();
    nlohmann::json batches = nlohmann::json::array();
    const double total = double(ids.size() * p.shifts.size());
    std::size_t done = 0;
    for (const auto& shift : p.shifts) {
        for (int id : ids) {
            const auto batch = generate_batch(GenerationRequest{id, shift, p.n, p.seed}, registry, library,
                                              *generative_, store, parallelism_);
            workspace_.write_sidecars(batch);
            const auto version = workspace_.commit_batch(shift, id, batch);
            batches.push_back(fs::relative(version, workspace_.root()).string());
            for (const auto& s : batch) samples.push_back(s);
            report(progress, double(++done) / total);
        }
    }
    return {{"result_ref", batches.size() == 1 ? batches.front() : nlohmann::json("batches")},
            {"batches", batches},
            {"samples", samples}};
}

std::vector<std::pair<std::string, int>> Pipeline::select(const BatchSelection& p) const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& [shift, id] : workspace_.batches()) {
        if (!p.shifts.empty() && std::find(p.shifts.begin(), p.shifts.end(), shift) == p.shifts.end()) continue;
        if (!p.class_ids.empty() && std::find(p.class_ids.begin(), p.class_ids.end(), id) == p.class_ids.end()) continue;
        out.emplace_back(shift, id);
    }
    return out;
}

std::string Pipeline::class_label(const std::vector<ClassToken>& library, int class_id) const {
    const auto* token = find_token(library, class_id);
    if (token == nullptr) fail(ErrorCode::NotFound, "no token for class " + std::to_string(class_id));
    return token->class_label;
}

nlohmann::json Pipeline::score(const BatchSelection& p, const Progress& progress) {
    validate(p);
    std::lock_guard lock(write_mutex_);
    const auto registry = workspace_.registry();
    const auto library = workspace_.tokens();
    const auto store = workspace_.image_store();
    const auto selected = select(p);
    nlohmann::json batches = nlohmann::json::array();
    std::size_t done = 0;
    for (const auto& [shift, id] : selected) {
        const auto scored =
            score_batch(workspace_.batch(shift, id), class_label(library, id), registry.at(shift), *embedding_, store);
        batches.push_back(fs::relative(workspace_.commit_batch(shift, id, scored), workspace_.root()).string());
        report(progress, double(++done) / double(selected.size()));
    }
    return {{"result_ref", "batches"}, {"batches", batches}};
}

nlohmann::json Pipeline::calibrate_class(const CalibrateClassParams& p, const Progress& progress) {
    validate(p);
    std::lock_guard lock(write_mutex_);
    const auto dataset = load_image_folder(p.dataset_root, p.classes);
    std::vector<ClassThreshold> computed(dataset.size());
    std::vector<std::exception_ptr> errors(dataset.size());
    parallel_for(dataset.size(), parallelism_, [&](std::size_t i) {
        try {
            computed[i] = calibrate_class_threshold(dataset[i].class_id, dataset[i].images, dataset[i].label,
                                                    *embedding_, p.percentile);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    auto thresholds = workspace_.class_thresholds();
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : computed) {
        thresholds[t.class_id] = t;
        out.push_back(t);
    }
    const auto version = workspace_.commit_class_thresholds(thresholds);
    report(progress, 1.0);
    return {{"result_ref", fs::relative(version, workspace_.root()).string()}, {"thresholds", out}};
}

nlohmann::json Pipeline::filter(const FilterParams& p, const Progress& progress) {
    validate(p);
    std::lock_guard lock(write_mutex_);
    if (p.class_thresholds) {
        auto thresholds = workspace_.class_thresholds();
        for (const auto& t : read_json_file(*p.class_thresholds).get<std::vector<ClassThreshold>>()) {
            thresholds[t.class_id] = t;
        }
        workspace_.commit_class_thresholds(thresholds);
    }
    const auto registry = workspace_.registry();
    const auto thresholds = workspace_.class_thresholds();
    const auto selected = select(p.selection);
    nlohmann::json batches = nlohmann::json::array();
    nlohmann::json yields = nlohmann::json::array();
    std::size_t done = 0;
    for (const auto& [shift, id] : selected) {
        const auto it = thresholds.find(id);
        if (it == thresholds.end()) {
            fail(ErrorCode::InvalidState, "no class threshold for class " + std::to_string(id) + "; run calibrate-class");
        }
        const auto result = filter_batch(workspace_.batch(shift, id), it->second, registry.at(shift));
        for (const auto& d : result.decisions) append_line(workspace_.decision_log(), decision_json(d, shift, id).dump());
        batches.push_back(fs::relative(workspace_.commit_batch(shift, id, result.samples), workspace_.root()).string());
        yields.push_back({{"shift", shift},
                          {"class_id", id},
                          {"total", result.yield.total},
                          {"kept", result.yield.kept},
                          {"yield", result.yield.yield_fraction() ? nlohmann::json(*result.yield.yield_fraction())
                                                                  : nlohmann::json(nullptr)}});
        report(progress, double(++done) / double(selected.size()));
    }
    return {{"result_ref", "batches"}, {"batches", batches}, {"yields", yields}};
}

nlohmann::json Pipeline::evaluate(const EvaluateParams& p, const Progress& progress) {
    validate(p);
    std::lock_guard lock(write_mutex_);

    // Shift name -> model id -> predictions.
    std::map<std::string, std::map<std::string, PredictionSet>> runs;
    std::set<std::string> wanted(p.shifts.begin(), p.shifts.end());
    if (wanted.empty()) {
        for (const auto& [shift, id] : workspace_.batches()) {
            if (shift != kBaseShift) wanted.insert(shift);
        }
    }
    if (wanted.empty()) fail(ErrorCode::InvalidState, "no shifted batches to evaluate");

    std::vector<std::string> shifts(wanted.begin(), wanted.end());
    std::vector<std::string> all_shifts = shifts;
    all_shifts.push_back(std::string(kBaseShift));

    if (p.prediction_manifests.empty()) {
        ToyWorld world;
        if (const auto* toy = dynamic_cast<const ToyGenerativeBackend*>(generative_.get())) world = toy->world();
        const auto models = toy_classifier_sweep(world);
        const auto store = workspace_.image_store();
        std::size_t done = 0;
        for (const auto& shift : all_shifts) {
            std::vector<CounterfactualSample> samples;
            for (const auto& [s, id] : workspace_.batches()) {
                if (s != shift) continue;
                for (auto& sample : workspace_.batch(s, id)) {
                    if (sample.kept.value_or(false)) samples.push_back(std::move(sample));
                }
            }
            std::vector<Image> images(samples.size());
            parallel_for(samples.size(), parallelism_, [&](std::size_t i) { images[i] = store.get(samples[i].image_ref); });
            for (const auto& model : models) {
                PredictionSet set{model->model_id(), {}};
                set.entries.resize(samples.size());
                parallel_for(samples.size(), parallelism_, [&](std::size_t i) {
                    set.entries[i] = PredictionEntry{samples[i].sample_id, samples[i].class_id, model->predict(images[i])};
                });
                const PredictionRun run{model->model_id(), shift, set};
                workspace_.commit_predictions(run);
                runs[shift][model->model_id()] = std::move(set);
            }
            report(progress, 0.8 * double(++done) / double(all_shifts.size()));
        }
    } else {
        for (const auto& manifest : p.prediction_manifests) {
            auto run = read_prediction_run(manifest);
            if (run.shift_name != kBaseShift && !wanted.contains(run.shift_name)) continue;
            workspace_.commit_predictions(run);
            runs[run.shift_name][run.model_id] = std::move(run.predictions);
        }
    }

    std::map<std::string, KeptIndex> indices;
    for (const auto& shift : all_shifts) {
        std::vector<CounterfactualSample> samples;
        for (const auto& [s, id] : workspace_.batches()) {
            if (s != shift) continue;
            auto batch = workspace_.batch(s, id);
            samples.insert(samples.end(), batch.begin(), batch.end());
        }
        indices[shift] = make_kept_index(samples);
    }

    FileSet files;
    std::vector<ShiftReport> reports;
    nlohmann::json index = {{"shifts", nlohmann::json::array()}, {"skipped", nlohmann::json::object()}};
    for (const auto& shift : shifts) {
        std::vector<ModelEvaluation> evaluations;
        try {
            for (const auto& [model_id, preds] : runs[shift]) {
                const auto base = runs[std::string(kBaseShift)].find(model_id);
                if (base == runs[std::string(kBaseShift)].end()) {
                    fail(ErrorCode::MissingBaseClass, "model " + model_id + " has no base predictions");
                }
                evaluations.push_back(evaluate_model(shift, preds, indices[shift], base->second,
                                                     indices[std::string(kBaseShift)], p.min_count));
            }
            if (evaluations.empty()) fail(ErrorCode::EmptyInput, "no predictions for shift '" + shift + "'");
        } catch (const Error& e) {
            index["skipped"][shift] = {{"code", to_string(e.code())}, {"reason", e.what()}};
            continue;
        }
        const auto r = build_shift_report(shift, evaluations);
        files[shift + ".csv"] = report_csv(r);
        files[shift + ".summary.json"] = report_summary(r).dump(2) + "\n";
        files[shift + ".scatter.svg"] = scatter_svg(r);
        index["shifts"].push_back(shift);
        reports.push_back(r);
    }
    files["impact_vs_slope.svg"] = impact_vs_slope_svg(reports);
    files["index.json"] = index.dump(2) + "\n";
    const auto version = workspace_.commit_reports(files);
    report(progress, 1.0);
    nlohmann::json summaries = nlohmann::json::array();
    for (const auto& r : reports) summaries.push_back(report_summary(r));
    return {{"result_ref", fs::relative(version, workspace_.root()).string()},
            {"reports", summaries},
            {"skipped", index["skipped"]}};
}

std::unique_ptr<ShiftCalibrationSession> Pipeline::open_calibration(const std::string& shift_name,
                                                                    std::vector<double> grid,
                                                                    std::size_t inspect_count) const {
    const auto registry = workspace_.registry();
    require(registry.contains(shift_name), "shift", "unknown shift '" + shift_name + "'");
    std::vector<CounterfactualSample> samples;
    for (const auto& [s, id] : workspace_.batches()) {
        if (s != shift_name) continue;
        for (auto& sample : workspace_.batch(s, id)) {
            if (!sample.failed()) samples.push_back(std::move(sample));
        }
    }
    require(!samples.empty(), "shift", "no samples generated for shift '" + shift_name + "'");
    return std::make_unique<ShiftCalibrationSession>(registry.at(shift_name), samples, std::move(grid), inspect_count);
}

nlohmann::json session_state_json(const ShiftCalibrationSession& session) {
    nlohmann::json j = {{"shift", session.shift_name()},
                        {"status", to_string(session.status())},
                        {"verdicts", session.verdicts()},
                        {"threshold", nullptr},
                        {"accepted_percentile", nullptr},
                        {"offer", nullptr}};
    if (session.threshold()) j["threshold"] = *session.threshold();
    if (session.accepted_percentile()) j["accepted_percentile"] = *session.accepted_percentile();
    if (session.status() == CalibrationStatus::Open) {
        const auto offer = session.offer();
        j["offer"] = {{"percentile", offer.percentile}, {"score", offer.score}, {"sample_ids", offer.sample_ids}};
    }
    return j;
}

nlohmann::json Pipeline::record_decision(ShiftCalibrationSession& session, InspectionVerdict verdict) {
    std::lock_guard lock(write_mutex_);
    if (verdict.sample_ids.empty() && session.status() == CalibrationStatus::Open) {
        verdict.sample_ids = session.offer().sample_ids;
    }
    nlohmann::json line = verdict;
    session.submit(verdict);
    line["shift"] = session.shift_name();
    append_line(workspace_.verdict_log(), line.dump());
    auto state = session_state_json(session);
    if (session.status() == CalibrationStatus::Calibrated) {
        const auto registry = workspace_.registry().with_threshold(session.shift_name(), *session.threshold());
        state["registry"] = fs::relative(workspace_.commit_registry(registry), workspace_.root()).string();
    }
    return state;
}

nlohmann::json Pipeline::calibrate_shift(const std::string& shift_name, const std::vector<double>& grid,
                                         std::size_t inspect_count, const Inspector& inspector) {
    auto session = open_calibration(shift_name, grid, inspect_count);
    nlohmann::json state = session_state_json(*session);
    while (session->status() == CalibrationStatus::Open) {
        state = record_decision(*session, inspector(session->offer()));
    }
    return state;
}

nlohmann::json Pipeline::tokens_json() const {
    nlohmann::json out = {{"version", nullptr}, {"tokens", nlohmann::json::array()}};
    if (const auto dir = workspace_.tokens_dir()) out["version"] = fs::relative(*dir, workspace_.root()).string();
    for (const auto& t : workspace_.tokens()) {
        out["tokens"].push_back({{"class_id", t.class_id},
                                 {"class_label", t.class_label},
                                 {"token_string", t.token_string},
                                 {"dim", t.embedding.size()},
                                 {"steps", t.provenance.steps},
                                 {"learning_rate", t.provenance.learning_rate},
                                 {"seed", t.provenance.seed},
                                 {"backend_id", t.provenance.backend_id},
                                 {"created_at", t.provenance.created_at}});
    }
    return out;
}

nlohmann::json Pipeline::registry_json() const { return to_json(workspace_.registry()); }

nlohmann::json Pipeline::samples_json(std::optional<int> class_id, std::optional<std::string> shift_name,
                                      std::optional<bool> kept) const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [shift, id] : workspace_.batches()) {
        if (shift_name && shift != *shift_name) continue;
        if (class_id && id != *class_id) continue;
        for (const auto& s : workspace_.batch(shift, id)) {
            if (kept && s.kept.value_or(false) != *kept) continue;
            out.push_back(s);
        }
    }
    return out;
}

nlohmann::json Pipeline::reports_json() const {
    nlohmann::json out = {{"version", nullptr}, {"reports", nlohmann::json::array()}, {"skipped", nlohmann::json::object()}};
    const auto dir = workspace_.reports_dir();
    if (!dir) return out;
    out["version"] = fs::relative(*dir, workspace_.root()).string();
    const auto index = read_json_file(*dir / "index.json");
    out["skipped"] = index.at("skipped");
    for (const auto& shift : index.at("shifts")) {
        const auto r = read_shift_report(*dir, shift.get<std::string>());
        auto summary = report_summary(r);
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : r.points) {
            points.push_back({{"model_id", p.model_id}, {"base_acc", p.base_acc}, {"shift_acc", p.shift_acc}, {"drop", p.drop}});
        }
        summary["points"] = points;
        out["reports"].push_back(summary);
    }
    return out;
}

fs::path Pipeline::image_path(const std::string& sample_id) const {
    static const std::regex kSampleId(R"(c(\d+)-(.+)-s\d+)");
    std::smatch m;
    if (!std::regex_match(sample_id, m, kSampleId)) fail(ErrorCode::NotFound, "malformed sample id " + sample_id);
    const int id = std::stoi(m[1].str());
    for (const auto& s : workspace_.batch(m[2].str(), id)) {
        if (s.sample_id == sample_id && !s.image_ref.empty()) return workspace_.image_store().path_of(s.image_ref);
    }
    fail(ErrorCode::NotFound, "no image for sample " + sample_id);
}

}  // namespace dsi
