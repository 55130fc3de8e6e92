// dsi: command-line front end of the dataset interface pipeline.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "dsi/backends/http_adapter.hpp"
#include "dsi/backends/toy_backends.hpp"
#include "dsi/core/fs_util.hpp"
#include "dsi/core/token_library.hpp"
#include "dsi/evaluation/metrics.hpp"
#include "dsi/service/pipeline.hpp"
#include "dsi/core/records.hpp"
#include "dsi/service/server.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

namespace fs = std::filesystem;
using namespace dsi;

namespace {

struct Backends {
    std::shared_ptr<GenerativeBackend> generative;
    std::shared_ptr<const EmbeddingBackend> embedding;
};

Backends make_backends(const std::string& spec) {
    if (spec == "toy") return {std::make_shared<ToyGenerativeBackend>(), std::make_shared<ToyEmbeddingBackend>()};
    const std::string prefix = "adapter:";
    if (spec.rfind(prefix, 0) == 0) {
        const auto url = spec.substr(prefix.size());
        return {std::make_shared<HttpGenerativeBackend>(url), std::make_shared<HttpEmbeddingBackend>(url)};
    }
    fail(ErrorCode::InvalidArgument, "--backend: expected 'toy' or 'adapter:URL', got '" + spec + "'");
}

std::vector<int> parse_ids(const std::vector<std::string>& items) {
    std::vector<int> out;
    for (const auto& item : items) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, "--class: expected an integer class id, got '" + item + "'");
        }
    }
    return out;
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

Inspector scripted_inspector(const fs::path& path) {
    // One verdict per line: {"percentile": 40, "all_exhibit_shift": true}.
    auto verdicts = std::make_shared<std::vector<nlohmann::json>>();
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) verdicts->push_back(nlohmann::json::parse(line));
    }
    auto next = std::make_shared<std::size_t>(0);
    return [verdicts, next](const InspectionOffer& offer) {
        if (*next >= verdicts->size()) fail(ErrorCode::InvalidArgument, "verdict script ran out of lines");
        const auto& v = (*verdicts)[(*next)++];
        InspectionVerdict verdict;
        verdict.percentile = v.value("percentile", offer.percentile);
        verdict.sample_ids = offer.sample_ids;
        verdict.all_exhibit_shift = v.at("all_exhibit_shift").get<bool>();
        verdict.inspector_id = v.value("inspector_id", std::string("script"));
        return verdict;
    };
}

Inspector interactive_inspector(const Workspace& workspace, const Pipeline& pipeline) {
    return [&workspace, &pipeline](const InspectionOffer& offer) {
        std::cout << "shift " << offer.shift_name << ", percentile " << offer.percentile << ", score " << offer.score
                  << "\n";
        for (const auto& id : offer.sample_ids) {
            std::cout << "  " << fs::relative(pipeline.image_path(id), workspace.root()).string() << "\n";
        }
        std::cout << "do all of these show the shift? [y/n] " << std::flush;
        std::string answer;
        if (!std::getline(std::cin, answer)) fail(ErrorCode::InvalidArgument, "no answer on stdin");
        return InspectionVerdict{offer.percentile, offer.sample_ids, answer == "y" || answer == "yes", "cli"};
    };
}

void copy_batch_out(const Workspace& workspace, const nlohmann::json& samples, const fs::path& out) {
    for (const auto& s : samples) {
        const auto sample = s.get<CounterfactualSample>();
        const fs::path dir = out / sample.shift_name / std::to_string(sample.class_id);
        fs::create_directories(dir);
        write_file_atomic(dir / (sample.sample_id + ".json"), s.dump(2) + "\n");
        if (!sample.image_ref.empty()) {
            fs::copy_file(workspace.root() / "samples" / sample.image_ref, dir / (sample.sample_id + ".ppm"),
                          fs::copy_options::overwrite_existing);
        }
    }
}

std::vector<SelectionVotes> read_votes(const fs::path& path) {
    // image_id,source,n_workers,n_selected
    std::vector<SelectionVotes> votes;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 4) fail(ErrorCode::ManifestMalformed, "votes row must have 4 fields: " + line);
        votes.push_back(SelectionVotes{f[0], f[1], std::stoi(f[2]), std::stoi(f[3])});
    }
    return votes;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual dataset generation, filtering and robustness evaluation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string workspace_dir = "workspace";
    if (const char* env = std::getenv("DSI_WORKSPACE")) workspace_dir = env;
    std::string backend = "toy";
    std::string registry_path;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    app.add_option("--workspace", workspace_dir, "Workspace root (env DSI_WORKSPACE)");
    app.add_option("--backend", backend, "toy or adapter:URL");
    app.add_option("--registry", registry_path, "Shift registry JSON to import into the workspace");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--jobs", jobs, "Worker threads");

    // learn-tokens
    auto* learn = app.add_subcommand("learn-tokens", "Learn one token per class");
    std::string dataset_root;
    std::vector<std::string> class_names;
    std::int64_t steps = 3000;
    double lr = 5e-4;
    std::string init = "word";
    std::string created_at;
    std::string out_dir;
    learn->add_option("--dataset-root", dataset_root)->required();
    learn->add_option("--classes", class_names)->delimiter(',');
    learn->add_option("--steps", steps);
    learn->add_option("--lr", lr);
    learn->add_option("--init", init, "word, zero or random");
    learn->add_option("--created-at", created_at);
    learn->add_option("--out", out_dir, "Also save the learned library here");

    // generate
    auto* gen = app.add_subcommand("generate", "Generate candidate counterfactuals");
    std::vector<std::string> class_ids;
    std::vector<std::string> shifts;
    std::int64_t n = 1;
    std::string tokens_dir;
    gen->add_option("--class", class_ids)->delimiter(',');
    gen->add_option("--shift", shifts)->delimiter(',')->required();
    gen->add_option("--n", n);
    gen->add_option("--tokens", tokens_dir, "Token library to import first");
    gen->add_option("--out", out_dir, "Also copy images and sidecars here");

    auto* score = app.add_subcommand("score", "Score generated samples against their captions");
    score->add_option("--class", class_ids)->delimiter(',');
    score->add_option("--shift", shifts)->delimiter(',');

    auto* cal_class = app.add_subcommand("calibrate-class", "Per-class thresholds from reference images");
    double percentile = 20.0;
    cal_class->add_option("--dataset-root", dataset_root)->required();
    cal_class->add_option("--classes", class_names)->delimiter(',');
    cal_class->add_option("--percentile", percentile);

    auto* cal_shift = app.add_subcommand("calibrate-shift", "Per-shift threshold by visual inspection");
    std::string shift_name;
    std::vector<double> grid = default_percentile_grid();
    std::size_t k = kDefaultInspectionCount;
    std::string verdicts_path;
    double accept_from = 0.0;
    cal_shift->add_option("--shift", shift_name)->required();
    cal_shift->add_option("--grid", grid)->delimiter(',');
    cal_shift->add_option("--k", k);
    cal_shift->add_option("--verdicts", verdicts_path, "JSON-lines verdict script");
    cal_shift->add_option("--accept-from", accept_from, "Accept every percentile from this one on");

    auto* filt = app.add_subcommand("filter", "Apply class and shift thresholds");
    std::string class_thresholds;
    filt->add_option("--class", class_ids)->delimiter(',');
    filt->add_option("--shift", shifts)->delimiter(',');
    filt->add_option("--class-thresholds", class_thresholds);

    auto* eval = app.add_subcommand("evaluate", "Evaluate classifiers and write reports");
    std::string classifiers = "toy-sweep";
    std::vector<std::string> manifests;
    int min_count = kDefaultMinCount;
    eval->add_option("--shifts", shifts)->delimiter(',');
    eval->add_option("--classifiers", classifiers);
    eval->add_option("--predictions", manifests, "Prediction run manifests")->delimiter(',');
    eval->add_option("--min-count", min_count);

    auto* report = app.add_subcommand("report", "Print the latest reports");
    auto* tokens = app.add_subcommand("tokens", "List the token library");
    auto* registry = app.add_subcommand("registry", "Print the shift registry");
    auto* samples = app.add_subcommand("samples", "List sample records");
    std::string kept_filter;
    samples->add_option("--class", class_ids)->delimiter(',');
    samples->add_option("--shift", shifts)->delimiter(',');
    samples->add_option("--kept", kept_filter, "true or false");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    auto* serve_backend = app.add_subcommand("serve-backend", "Serve the toy backends over HTTP");
    serve_backend->add_option("--host", host);
    serve_backend->add_option("--port", port);

    auto* toy_data = app.add_subcommand("make-toy-dataset", "Write a toy dataset in ImageFolder layout");
    std::size_t per_class = 10;
    toy_data->add_option("--out", out_dir)->required();
    toy_data->add_option("--per-class", per_class);

    auto* freq = app.add_subcommand("selection-frequency", "Aggregate worker votes");
    std::string votes_path;
    freq->add_option("--votes", votes_path, "CSV image_id,source,n_workers,n_selected")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (toy_data->parsed()) {
            write_toy_dataset(ToyWorld{}, out_dir, per_class, seed);
            return 0;
        }
        if (freq->parsed()) {
            const auto votes = read_votes(votes_path);
            const auto summary = selection_frequency(votes);
            nlohmann::json out = {{"records", nlohmann::json::array()}, {"per_source", nlohmann::json::array()}};
            for (const auto& r : summary.records) {
                out["records"].push_back({{"image_id", r.image_id},
                                          {"n_workers", r.n_workers},
                                          {"n_selected", r.n_selected},
                                          {"frequency", r.frequency}});
            }
            for (const auto& s : summary.per_source) {
                out["per_source"].push_back(
                    {{"source", s.source}, {"n_images", s.n_images}, {"mean_frequency", s.mean_frequency}});
            }
            print(out);
            return 0;
        }
        if (serve_backend->parsed()) {
            httplib::Server server;
            mount_backend_routes(server, "/api/backend", std::make_shared<ToyGenerativeBackend>(),
                                 std::make_shared<ToyEmbeddingBackend>());
            std::cerr << "toy backends on http://" << host << ":" << port << "/api/backend\n";
            return server.listen(host, port) ? 0 : 1;
        }

        auto backends = make_backends(backend);
        Workspace workspace(workspace_dir);
        auto pipeline = std::make_shared<Pipeline>(workspace, backends.generative, backends.embedding, jobs);
        if (!registry_path.empty()) pipeline->import_registry(registry_path);

        if (learn->parsed()) {
            LearnParams p;
            p.dataset_root = dataset_root;
            p.classes = class_names;
            p.steps = steps;
            p.learning_rate = lr;
            p.seed = seed;
            p.init = parse_init_kind(init);
            p.created_at = created_at;
            const auto result = pipeline->learn_tokens(p);
            if (!out_dir.empty()) {
                std::vector<ClassToken> learned;
                for (const auto& t : workspace.tokens()) {
                    for (const auto& l : result["learned"]) {
                        if (l["class_id"] == t.class_id) learned.push_back(t);
                    }
                }
                save_token_library(learned, out_dir);
            }
            print(result);
        } else if (gen->parsed()) {
            if (!tokens_dir.empty()) workspace.commit_tokens(load_token_library(tokens_dir));
            GenerateParams p;
            p.class_ids = parse_ids(class_ids);
            p.shifts = shifts;
            p.n = n;
            p.seed = static_cast<std::int64_t>(seed);
            const auto result = pipeline->generate(p);
            if (!out_dir.empty()) copy_batch_out(workspace, result["samples"], out_dir);
            print(result);
        } else if (score->parsed()) {
            print(pipeline->score(BatchSelection{parse_ids(class_ids), shifts}));
        } else if (cal_class->parsed()) {
            print(pipeline->calibrate_class(CalibrateClassParams{dataset_root, class_names, percentile}));
        } else if (cal_shift->parsed()) {
            Inspector inspector;
            if (!verdicts_path.empty()) {
                inspector = scripted_inspector(verdicts_path);
            } else if (accept_from > 0.0) {
                inspector = accept_from_percentile(accept_from);
            } else {
                inspector = interactive_inspector(workspace, *pipeline);
            }
            const auto state = pipeline->calibrate_shift(shift_name, grid, k, inspector);
            print(state);
            if (state["status"] != "calibrated") return 2;
        } else if (filt->parsed()) {
            FilterParams p;
            p.selection = BatchSelection{parse_ids(class_ids), shifts};
            if (!class_thresholds.empty()) p.class_thresholds = class_thresholds;
            print(pipeline->filter(p));
        } else if (eval->parsed()) {
            EvaluateParams p;
            p.shifts = shifts;
            p.classifiers = classifiers;
            for (const auto& m : manifests) p.prediction_manifests.emplace_back(m);
            p.min_count = min_count;
            print(pipeline->evaluate(p));
        } else if (report->parsed()) {
            print(pipeline->reports_json());
        } else if (tokens->parsed()) {
            print(pipeline->tokens_json());
        } else if (registry->parsed()) {
            print(pipeline->registry_json());
        } else if (samples->parsed()) {
            const auto ids = parse_ids(class_ids);
            std::optional<bool> kept;
            if (!kept_filter.empty()) kept = kept_filter == "true";
            print(pipeline->samples_json(ids.empty() ? std::nullopt : std::optional<int>(ids.front()),
                                         shifts.empty() ? std::nullopt : std::optional<std::string>(shifts.front()),
                                         kept));
        } else if (serve->parsed()) {
            httplib::Server server;
            Service service(pipeline);
            service.mount(server);
            std::cerr << "serving " << workspace.root().string() << " on http://" << host << ":" << port << "\n";
            return server.listen(host, port) ? 0 : 1;
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
