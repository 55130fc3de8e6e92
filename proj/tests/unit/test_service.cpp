#include <chrono>
#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>

#include "dsi/backends/toy_backends.hpp"
#include "dsi/core/fs_util.hpp"
#include "dsi/filtering/calibration.hpp"
#include "dsi/service/jobs.hpp"
#include "dsi/service/pipeline.hpp"
#include "dsi/service/server.hpp"
#include "dsi/service/workspace.hpp"
#include "test_util.hpp"

// After the Eigen-using headers: <resolv.h> defines a `_res` macro.
#include <httplib.h>

using namespace dsi;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

std::vector<ClassToken> palette_tokens(std::vector<int> ids) {
    ToyWorld world;
    std::vector<ClassToken> out;
    for (int id : ids) {
        ClassToken t;
        t.class_id = id;
        t.class_label = world.toy_class(id).label;
        t.token_string = make_token_string("class", id);
        t.embedding = Embedding::Zero(768);
        for (int c = 0; c < 3; ++c) t.embedding[c] = static_cast<float>(world.toy_class(id).color[c] - 0.5);
        t.provenance = TokenProvenance{0, 5e-4, 0, "toy-generative-v1", "2024-01-01T00:00:00Z"};
        out.push_back(t);
    }
    return out;
}

std::shared_ptr<Pipeline> make_pipeline(const fs::path& root) {
    return std::make_shared<Pipeline>(Workspace(root), std::make_shared<ToyGenerativeBackend>(),
                                      std::make_shared<ToyEmbeddingBackend>(), 2);
}

class ServiceServer {
public:
    explicit ServiceServer(const fs::path& root) : service_(make_pipeline(root)) {
        service_.mount(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ServiceServer() {
        server_.stop();
        thread_.join();
    }
    httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }
    Service& service() { return service_; }

    /// POSTs a job and waits for it; returns the final job record.
    nlohmann::json run_job(const std::string& path, const nlohmann::json& body) {
        auto cli = client();
        const auto res = cli.Post(path, body.dump(), "application/json");
        EXPECT_TRUE(res);
        EXPECT_EQ(res->status, 202) << res->body;
        const auto accepted = nlohmann::json::parse(res->body);
        EXPECT_EQ(accepted.at("status"), "queued");
        const std::string id = accepted.at("job_id");
        for (int i = 0; i < 6000; ++i) {
            const auto poll = cli.Get("/api/jobs/" + id);
            const auto job = nlohmann::json::parse(poll->body);
            if (job.at("status") == "done" || job.at("status") == "failed") return job;
            std::this_thread::sleep_for(10ms);
        }
        ADD_FAILURE() << "job " << id << " did not finish";
        return {};
    }

private:
    httplib::Server server_;
    Service service_;
    int port_ = 0;
    std::thread thread_;
};

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) out[fs::relative(entry.path(), root).string()] = read_text_file(entry.path());
    }
    return out;
}

}  // namespace

TEST(Snapshots, CommitSemantics) {
    test::TempDir dir;
    EXPECT_FALSE(latest_snapshot(dir / "x"));
    const FileSet a = {{"a.txt", "1"}, {"b.txt", "2"}};
    const auto v1 = commit_snapshot(dir / "x", a);
    EXPECT_EQ(v1.filename(), "v0001");
    EXPECT_EQ(commit_snapshot(dir / "x", a), v1);
    const auto v2 = commit_snapshot(dir / "x", {{"a.txt", "3"}});
    EXPECT_EQ(v2.filename(), "v0002");
    EXPECT_EQ(read_snapshot(v1), a);
    EXPECT_EQ(snapshot_versions(dir / "x").size(), 2u);
    EXPECT_EQ(*latest_snapshot(dir / "x"), v2);
}

TEST(Workspace, RegistryAndTokens) {
    test::TempDir dir;
    Workspace ws(dir.path());
    EXPECT_EQ(ws.registry(), default_shift_registry());
    EXPECT_TRUE(ws.tokens().empty());
    const auto edited = default_shift_registry().with_threshold("base", 0.2);
    ws.commit_registry(edited);
    EXPECT_EQ(ws.registry(), edited);
    ws.commit_tokens(palette_tokens({0, 3}));
    EXPECT_EQ(ws.tokens(), palette_tokens({0, 3}));
    ws.commit_tokens(palette_tokens({0, 3}));
    EXPECT_EQ(snapshot_versions(dir / "tokens").size(), 1u);
}

TEST(Workspace, BatchesRoundTrip) {
    test::TempDir dir;
    Workspace ws(dir.path());
    CounterfactualSample s{"c1-base-s000000", "base/1/c1-base-s000000.ppm", 1, "base", 0, "p", 0.5, std::nullopt,
                           true, std::nullopt};
    ws.commit_batch("base", 1, {s});
    EXPECT_TRUE(ws.has_batch("base", 1));
    EXPECT_FALSE(ws.has_batch("base", 2));
    EXPECT_EQ(ws.batch("base", 1), std::vector<CounterfactualSample>{s});
    EXPECT_EQ(samples_from_jsonl(to_jsonl({s, s})).size(), 2u);
}

TEST(Jobs, RunInOrderWithMonotoneProgress) {
    JobManager jobs;
    std::vector<double> seen;
    const auto a = jobs.submit(JobKind::Generate, [&](const auto& progress) {
        for (double p : {0.25, 0.1, 0.75}) progress(p);
        return nlohmann::json{{"ok", 1}};
    });
    const auto b = jobs.submit(JobKind::Filter, [](const auto&) -> nlohmann::json {
        fail(ErrorCode::InvalidState, "boom");
    });
    EXPECT_EQ(a, "job-000001");
    EXPECT_EQ(b, "job-000002");
    ASSERT_TRUE(jobs.wait(a, 10s));
    ASSERT_TRUE(jobs.wait(b, 10s));
    const auto ja = *jobs.get(a);
    EXPECT_EQ(ja.status, JobStatus::Done);
    EXPECT_EQ(ja.progress, 1.0);
    EXPECT_TRUE(ja.result_ref);
    const auto jb = *jobs.get(b);
    EXPECT_EQ(jb.status, JobStatus::Failed);
    EXPECT_FALSE(jb.result_ref);
    EXPECT_NE(jb.error->find("boom"), std::string::npos);
    EXPECT_FALSE(jobs.get("job-999999"));
    EXPECT_FALSE(jobs.wait("job-999999", 10ms));
    const auto j = to_json(ja);
    EXPECT_EQ(j.at("kind"), "generate");
    EXPECT_EQ(j.at("status"), "done");
}

TEST(Http, StatusMapping) {
    EXPECT_EQ(http_status(ErrorCode::NotFound), 404);
    EXPECT_EQ(http_status(ErrorCode::UnknownSample), 404);
    EXPECT_EQ(http_status(ErrorCode::InvalidState), 409);
    EXPECT_EQ(http_status(ErrorCode::BackendFailure), 500);
    EXPECT_EQ(http_status(ErrorCode::InvalidArgument), 400);
}

TEST(Http, GenerateAndBrowse) {
    test::TempDir dir;
    Workspace(dir.path()).commit_tokens(palette_tokens({0, 6}));
    ServiceServer server(dir.path());
    auto cli = server.client();

    const auto tokens = nlohmann::json::parse(cli.Get("/api/tokens")->body);
    EXPECT_EQ(tokens.at("tokens").size(), 2u);
    EXPECT_EQ(nlohmann::json::parse(cli.Get("/api/registry")->body).size(), 24u);

    const auto job = server.run_job("/api/generate", {{"class_ids", {0}}, {"shifts", {"base"}}, {"n", 5}});
    EXPECT_EQ(job.at("status"), "done") << job.dump();
    EXPECT_FALSE(job.at("result_ref").is_null());
    EXPECT_EQ(job.at("progress"), 1.0);

    const auto samples = nlohmann::json::parse(cli.Get("/api/samples?class=0&shift=base")->body);
    ASSERT_EQ(samples.size(), 5u);
    EXPECT_EQ(samples[0].at("sample_id"), "c0-base-s000000");

    const auto image = cli.Get("/api/images/c0-base-s000000");
    EXPECT_EQ(image->status, 200);
    EXPECT_EQ(image->get_header_value("Content-Type"), "image/x-portable-pixmap");
    EXPECT_EQ(image->body.substr(0, 2), "P6");
    EXPECT_EQ(cli.Get("/api/images/c0-base-s000099")->status, 404);
}

TEST(Http, Errors) {
    test::TempDir dir;
    Workspace(dir.path()).commit_tokens(palette_tokens({0}));
    ServiceServer server(dir.path());
    auto cli = server.client();

    const auto unknown_shift =
        cli.Post("/api/generate", nlohmann::json{{"shifts", {"on_the_moon"}}, {"n", 1}}.dump(), "application/json");
    EXPECT_EQ(unknown_shift->status, 400);
    const auto body = nlohmann::json::parse(unknown_shift->body);
    EXPECT_TRUE(body.contains("error"));
    EXPECT_TRUE(body.contains("code"));

    EXPECT_EQ(cli.Post("/api/generate", "{not json", "application/json")->status, 400);
    EXPECT_EQ(cli.Post("/api/generate", nlohmann::json{{"shifts", {"base"}}, {"n", "five"}}.dump(),
                       "application/json")->status,
              400);
    EXPECT_EQ(cli.Get("/api/jobs/job-424242")->status, 404);
    EXPECT_EQ(cli.Get("/api/calibration/in_the_grass/next")->status, 404);
    EXPECT_EQ(cli.Get("/api/samples?kept=maybe")->status, 400);
}

TEST(Http, CalibrationMatchesInProcess) {
    test::TempDir dir;
    Workspace(dir.path()).commit_tokens(palette_tokens({0, 4}));
    ServiceServer server(dir.path());
    auto cli = server.client();
    EXPECT_EQ(server.run_job("/api/generate", {{"shifts", {"in_the_grass"}}, {"n", 8}}).at("status"), "done");
    EXPECT_EQ(server.run_job("/api/score", nlohmann::json::object()).at("status"), "done");

    const std::vector<double> grid = {20, 40, 60};
    auto open = cli.Post("/api/calibration/in_the_grass/open", nlohmann::json{{"grid", grid}, {"k", 3}}.dump(),
                         "application/json");
    ASSERT_EQ(open->status, 200) << open->body;
    auto state = nlohmann::json::parse(open->body);
    EXPECT_EQ(state.at("status"), "open");
    EXPECT_EQ(state.at("offer").at("percentile"), 20.0);
    EXPECT_EQ(state.at("offer").at("sample_ids").size(), 3u);

    auto decide = [&](double p, bool ok) {
        return cli.Post("/api/calibration/in_the_grass/decision",
                                  nlohmann::json{{"percentile", p}, {"all_exhibit_shift", ok}, {"inspector_id", "t"}}.dump(),
                                  "application/json");
    };
    EXPECT_EQ(decide(40, true)->status, 400);  // 20 is on offer
    EXPECT_EQ(decide(20, false)->status, 200);
    EXPECT_EQ(nlohmann::json::parse(cli.Get("/api/calibration/in_the_grass/next")->body).at("offer").at("percentile"),
              40.0);
    state = nlohmann::json::parse(decide(40, true)->body);
    EXPECT_EQ(state.at("status"), "calibrated");

    std::vector<CounterfactualSample> scored;
    Workspace ws(dir.path());
    for (int c : {0, 4}) {
        for (const auto& s : ws.batch("in_the_grass", c)) scored.push_back(s);
    }
    const auto expected = calibrate_shift_threshold(ws.registry().at("in_the_grass"), scored, grid,
                                                    accept_from_percentile(40), 3);
    EXPECT_EQ(state.at("threshold").get<double>(), expected.threshold);
    EXPECT_EQ(ws.registry().at("in_the_grass").shift_threshold, expected.threshold);

    const auto log = split(read_text_file(ws.verdict_log()), '\n');
    EXPECT_EQ(std::count_if(log.begin(), log.end(), [](const auto& l) { return !l.empty(); }), 2);
}

TEST(Parity, CliAndHttpProduceIdenticalWorkspaces) {
    test::TempDir dir;
    const std::string cli = DSI_CLI_PATH;
    auto sh = [&](const std::string& args) {
        const std::string cmd = "SOURCE_DATE_EPOCH=1700000000 '" + cli + "' " + args + " > /dev/null";
        return std::system(cmd.c_str());
    };
    const auto data = (dir / "data").string();
    const auto ws_cli = (dir / "ws-cli").string();
    ASSERT_EQ(sh("make-toy-dataset --out " + data + " --per-class 6 --seed 0"), 0);

    const std::string created_at = "2024-01-01T00:00:00Z";
    const std::string w = " --workspace " + ws_cli;
    ASSERT_EQ(sh("learn-tokens" + w + " --dataset-root " + data +
                 " --classes blue_disk,orange_disk,red_disk --steps 300 --created-at " + created_at),
              0);
    ASSERT_EQ(sh("generate" + w + " --shift base,in_the_grass --n 6"), 0);
    ASSERT_EQ(sh("score" + w), 0);
    ASSERT_EQ(sh("calibrate-class" + w + " --dataset-root " + data), 0);
    ASSERT_EQ(sh("filter" + w), 0);
    ASSERT_EQ(sh("evaluate" + w + " --min-count 1"), 0);

    {
        ServiceServer server(dir / "ws-http");
        auto done = [&](const std::string& path, const nlohmann::json& body) {
            const auto job = server.run_job(path, body);
            EXPECT_EQ(job.at("status"), "done") << path << " " << job.dump();
        };
        done("/api/tokens/learn", {{"dataset_root", data},
                                   {"classes", {"blue_disk", "orange_disk", "red_disk"}},
                                   {"steps", 300},
                                   {"created_at", created_at}});
        done("/api/generate", {{"shifts", {"base", "in_the_grass"}}, {"n", 6}});
        done("/api/score", nlohmann::json::object());
        done("/api/calibration/class", {{"dataset_root", data}});
        done("/api/filter", nlohmann::json::object());
        done("/api/evaluate", {{"min_count", 1}});
    }

    const auto a = tree(ws_cli);
    const auto b = tree(dir / "ws-http");
    EXPECT_GT(a.size(), 50u);
    ASSERT_EQ(a.size(), b.size());
    for (const auto& [name, contents] : a) {
        ASSERT_TRUE(b.contains(name)) << name;
        EXPECT_TRUE(b.at(name) == contents) << name;
    }
}
