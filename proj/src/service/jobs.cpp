#include "dsi/service/jobs.hpp"

#include <algorithm>
#include <cstdio>

namespace dsi {

std::string to_string(JobKind kind) {
    switch (kind) {
        case JobKind::Learn: return "learn";
        case JobKind::Generate: return "generate";
        case JobKind::Score: return "score";
        case JobKind::CalibrateClass: return "calibrate_class";
        case JobKind::Filter: return "filter";
        case JobKind::Evaluate: return "evaluate";
    }
    return "unknown";
}

std::string to_string(JobStatus status) {
    switch (status) {
        case JobStatus::Queued: return "queued";
        case JobStatus::Running: return "running";
        case JobStatus::Done: return "done";
        case JobStatus::Failed: return "failed";
    }
    return "unknown";
}

nlohmann::json to_json(const Job& job) {
    nlohmann::json j = {{"job_id", job.job_id},
                        {"kind", to_string(job.kind)},
                        {"status", to_string(job.status)},
                        {"progress", job.progress},
                        {"result_ref", nullptr},
                        {"error", nullptr},
                        {"result", job.result}};
    if (job.result_ref) j["result_ref"] = *job.result_ref;
    if (job.error) j["error"] = *job.error;
    return j;
}

JobManager::JobManager() : worker_([this] { run(); }) {}

JobManager::~JobManager() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    changed_.notify_all();
    worker_.join();
}

std::string JobManager::submit(JobKind kind, Work work) {
    std::lock_guard lock(mutex_);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "job-%06zu", next_id_++);
    Job job;
    job.job_id = buf;
    job.kind = kind;
    jobs_[job.job_id] = job;
    pending_work_[job.job_id] = std::move(work);
    queue_.push_back(job.job_id);
    changed_.notify_all();
    return job.job_id;
}

std::optional<Job> JobManager::get(const std::string& job_id) const {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

bool JobManager::wait(const std::string& job_id, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    if (!jobs_.contains(job_id)) return false;
    return changed_.wait_for(lock, timeout, [&] {
        const auto status = jobs_.at(job_id).status;
        return status == JobStatus::Done || status == JobStatus::Failed;
    });
}

void JobManager::run() {
    for (;;) {
        std::string id;
        Work work;
        {
            std::unique_lock lock(mutex_);
            changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) return;
            id = queue_.front();
            queue_.pop_front();
            work = std::move(pending_work_.at(id));
            pending_work_.erase(id);
            jobs_.at(id).status = JobStatus::Running;
        }
        changed_.notify_all();
        auto progress = [&](double fraction) {
            std::lock_guard lock(mutex_);
            auto& job = jobs_.at(id);
            job.progress = std::max(job.progress, std::clamp(fraction, 0.0, 1.0));
        };
        nlohmann::json result;
        std::optional<std::string> error;
        try {
            result = work(progress);
        } catch (const std::exception& e) {
            error = e.what();
        }
        {
            std::lock_guard lock(mutex_);
            auto& job = jobs_.at(id);
            if (error) {
                job.status = JobStatus::Failed;
                job.error = error;
            } else {
                job.status = JobStatus::Done;
                job.progress = 1.0;
                job.result_ref = result.contains("result_ref") && result["result_ref"].is_string()
                                     ? result["result_ref"].get<std::string>()
                                     : std::string("workspace");
                job.result = std::move(result);
            }
        }
        changed_.notify_all();
    }
}

}  // namespace dsi
