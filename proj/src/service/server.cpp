#include "dsi/service/server.hpp"

#include <httplib.h>

#include "dsi/core/fs_util.hpp"
#include "dsi/core/records.hpp"

namespace dsi {

namespace {

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, {{"error", message}, {"code", to_string(code)}}, http_status(code));
}

nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
    }
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler inner) {
    return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
        try {
            inner(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const std::exception& e) {
            send_error(res, ErrorCode::Io, e.what());
        }
    };
}

std::vector<double> parse_grid(const nlohmann::json& j) {
    if (!j.contains("grid") || j["grid"].is_null()) return default_percentile_grid();
    try {
        return j["grid"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
        fail(ErrorCode::InvalidArgument, "field 'grid': expected a list of percentiles");
    }
}

/// Parses and validates job parameters. A parameter that names something
/// missing is a bad request, not a missing resource.
template <typename Parse, typename Validate>
auto validated(const httplib::Request& req, Parse parse, Validate validate) {
    try {
        auto params = parse(parse_body(req));
        validate(params);
        return params;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotFound) fail(ErrorCode::InvalidArgument, e.what());
        throw;
    }
}

}  // namespace

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound:
        case ErrorCode::UnknownSample: return 404;
        case ErrorCode::InvalidState: return 409;
        case ErrorCode::Io:
        case ErrorCode::BackendFailure: return 500;
        default: return 400;
    }
}

Service::Service(std::shared_ptr<Pipeline> pipeline) : pipeline_(std::move(pipeline)) {}

void Service::mount(httplib::Server& server) {
    auto& p = *pipeline_;

    server.Get("/api/tokens", guarded([&p](const auto&, auto& res) { send_json(res, p.tokens_json()); }));
    server.Get("/api/registry", guarded([&p](const auto&, auto& res) { send_json(res, p.registry_json()); }));

    auto submit = [this](JobKind kind, JobManager::Work work, httplib::Response& res) {
        const auto id = jobs_.submit(kind, std::move(work));
        send_json(res, {{"job_id", id}, {"status", "queued"}}, 202);
    };

    server.Post("/api/tokens/learn", guarded([&p, submit](const auto& req, auto& res) {
        const auto params = validated(req, learn_params_from_json, [&p](const auto& params) { p.validate(params); });
        submit(JobKind::Learn, [&p, params](const auto& progress) { return p.learn_tokens(params, progress); }, res);
    }));
    server.Post("/api/generate", guarded([&p, submit](const auto& req, auto& res) {
        const auto params = validated(req, generate_params_from_json, [&p](const auto& params) { p.validate(params); });
        submit(JobKind::Generate, [&p, params](const auto& progress) { return p.generate(params, progress); }, res);
    }));
    server.Post("/api/score", guarded([&p, submit](const auto& req, auto& res) {
        const auto params = validated(req, batch_selection_from_json, [&p](const auto& params) { p.validate(params); });
        submit(JobKind::Score, [&p, params](const auto& progress) { return p.score(params, progress); }, res);
    }));
    server.Post("/api/calibration/class", guarded([&p, submit](const auto& req, auto& res) {
        const auto params = validated(req, calibrate_class_params_from_json, [&p](const auto& params) { p.validate(params); });
        submit(JobKind::CalibrateClass, [&p, params](const auto& progress) { return p.calibrate_class(params, progress); },
               res);
    }));
    server.Post("/api/filter", guarded([&p, submit](const auto& req, auto& res) {
        const auto params = validated(req, filter_params_from_json, [&p](const auto& params) { p.validate(params); });
        submit(JobKind::Filter, [&p, params](const auto& progress) { return p.filter(params, progress); }, res);
    }));
    server.Post("/api/evaluate", guarded([&p, submit](const auto& req, auto& res) {
        const auto params = validated(req, evaluate_params_from_json, [&p](const auto& params) { p.validate(params); });
        submit(JobKind::Evaluate, [&p, params](const auto& progress) { return p.evaluate(params, progress); }, res);
    }));

    server.Get(R"(/api/jobs/([^/]+))", guarded([this](const auto& req, auto& res) {
        const auto job = jobs_.get(req.matches[1].str());
        if (!job) fail(ErrorCode::NotFound, "unknown job " + req.matches[1].str());
        send_json(res, to_json(*job));
    }));

    server.Get("/api/samples", guarded([&p](const httplib::Request& req, auto& res) {
        std::optional<int> class_id;
        std::optional<std::string> shift;
        std::optional<bool> kept;
        if (req.has_param("class")) {
            try {
                class_id = std::stoi(req.get_param_value("class"));
            } catch (const std::exception&) {
                fail(ErrorCode::InvalidArgument, "field 'class': expected an integer");
            }
        }
        if (req.has_param("shift")) shift = req.get_param_value("shift");
        if (req.has_param("kept")) {
            const auto v = req.get_param_value("kept");
            if (v != "true" && v != "false") fail(ErrorCode::InvalidArgument, "field 'kept': expected true or false");
            kept = v == "true";
        }
        send_json(res, p.samples_json(class_id, shift, kept));
    }));

    server.Post(R"(/api/calibration/([^/]+)/open)", guarded([this, &p](const auto& req, auto& res) {
        const auto shift = req.matches[1].str();
        const nlohmann::json body = parse_body(req);
        const auto k = body.value("k", kDefaultInspectionCount);
        auto session = p.open_calibration(shift, parse_grid(body), k);
        std::lock_guard lock(sessions_mutex_);
        auto state = session_state_json(*session);
        sessions_[shift] = std::move(session);
        send_json(res, state);
    }));
    server.Get(R"(/api/calibration/([^/]+)/next)", guarded([this](const auto& req, auto& res) {
        std::lock_guard lock(sessions_mutex_);
        const auto it = sessions_.find(req.matches[1].str());
        if (it == sessions_.end()) fail(ErrorCode::NotFound, "no calibration session for " + req.matches[1].str());
        send_json(res, session_state_json(*it->second));
    }));
    server.Post(R"(/api/calibration/([^/]+)/decision)", guarded([this, &p](const auto& req, auto& res) {
        const nlohmann::json body = parse_body(req);
        InspectionVerdict verdict;
        try {
            verdict.percentile = body.at("percentile").get<double>();
            verdict.all_exhibit_shift = body.at("all_exhibit_shift").get<bool>();
            verdict.inspector_id = body.value("inspector_id", std::string("ui"));
            verdict.sample_ids = body.value("sample_ids", std::vector<std::string>{});
        } catch (const nlohmann::json::exception&) {
            fail(ErrorCode::InvalidArgument, "fields 'percentile' (number) and 'all_exhibit_shift' (bool) are required");
        }
        std::lock_guard lock(sessions_mutex_);
        const auto it = sessions_.find(req.matches[1].str());
        if (it == sessions_.end()) fail(ErrorCode::NotFound, "no calibration session for " + req.matches[1].str());
        send_json(res, p.record_decision(*it->second, verdict));
    }));

    server.Get("/api/reports/shifts", guarded([&p](const auto&, auto& res) { send_json(res, p.reports_json()); }));
    server.Get(R"(/api/images/([^/]+))", guarded([&p](const auto& req, auto& res) {
        const auto bytes = read_binary_file(p.image_path(req.matches[1].str()));
        res.set_content(std::string(bytes.begin(), bytes.end()), "image/x-portable-pixmap");
    }));
}

}  // namespace dsi
