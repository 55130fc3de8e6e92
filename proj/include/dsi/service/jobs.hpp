#pragma once

#include <condition_variable>
#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

namespace dsi {

enum class JobKind { Learn, Generate, Score, CalibrateClass, Filter, Evaluate };
enum class JobStatus { Queued, Running, Done, Failed };

std::string to_string(JobKind kind);
std::string to_string(JobStatus status);

struct Job {
    std::string job_id;
    JobKind kind = JobKind::Generate;
    JobStatus status = JobStatus::Queued;
    double progress = 0.0;
    std::optional<std::string> result_ref;  // set iff done
    std::optional<std::string> error;
    nlohmann::json result;
};

nlohmann::json to_json(const Job& job);

/// Runs submitted jobs one at a time, in submission order, on a single
/// worker thread. Progress never decreases.
class JobManager {
public:
    using Work = std::function<nlohmann::json(const std::function<void(double)>& progress)>;

    JobManager();
    ~JobManager();
    JobManager(const JobManager&) = delete;
    JobManager& operator=(const JobManager&) = delete;

    std::string submit(JobKind kind, Work work);
    std::optional<Job> get(const std::string& job_id) const;
    /// Blocks until the job is done or failed; false on timeout or unknown id.
    bool wait(const std::string& job_id, std::chrono::milliseconds timeout) const;

private:
    void run();

    mutable std::mutex mutex_;
    mutable std::condition_variable changed_;
    std::map<std::string, Job> jobs_;
    std::map<std::string, Work> pending_work_;
    std::deque<std::string> queue_;
    std::size_t next_id_ = 1;
    bool stopping_ = false;
    std::thread worker_;
};

}  // namespace dsi
