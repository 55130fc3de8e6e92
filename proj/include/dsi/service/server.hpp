#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "dsi/service/jobs.hpp"
#include "dsi/service/pipeline.hpp"

namespace httplib {
class Server;
}

namespace dsi {

/// HTTP front end of a Pipeline. Mutating work runs as jobs; calibration
/// sessions live in memory, one per shift.
///
///   GET  /api/tokens                         GET  /api/registry
///   POST /api/tokens/learn                   POST /api/generate
///   POST /api/score                          POST /api/filter
///   POST /api/calibration/class              POST /api/evaluate
///   GET  /api/jobs/{id}                      GET  /api/samples?class=&shift=&kept=
///   POST /api/calibration/{shift}/open       GET  /api/calibration/{shift}/next
///   POST /api/calibration/{shift}/decision   GET  /api/reports/shifts
///   GET  /api/images/{sample_id}
class Service {
public:
    explicit Service(std::shared_ptr<Pipeline> pipeline);

    void mount(httplib::Server& server);
    JobManager& jobs() { return jobs_; }
    Pipeline& pipeline() { return *pipeline_; }

private:
    std::shared_ptr<Pipeline> pipeline_;
    JobManager jobs_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::unique_ptr<ShiftCalibrationSession>> sessions_;
};

/// HTTP status used for an error category.
int http_status(ErrorCode code);

}  // namespace dsi
