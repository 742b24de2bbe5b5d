#include "lessonweave/api/jobs.hpp"

#include <spdlog/spdlog.h>

#include <cstdio>

namespace lessonweave::api {

std::string_view to_string(JobStatus status) {
    switch (status) {
        case JobStatus::Pending: return "pending";
        case JobStatus::Done: return "done";
        case JobStatus::Failed: return "failed";
    }
    return "pending";
}

json error_body(const Error& error) {
    return {{"code", error_code_name(error.code())}, {"message", error.what()}, {"detail", error.detail()}};
}

JobQueue::JobQueue(std::size_t workers) {
    for (std::size_t i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobQueue::~JobQueue() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    queued_.notify_all();
    for (auto& t : workers_) t.join();
}

std::string JobQueue::submit(std::string kind, std::function<json()> work) {
    std::string id;
    {
        std::lock_guard lock(mutex_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "job-%06zu", next_++);
        id = buf;
        Job job;
        job.kind = std::move(kind);
        job.work = std::move(work);
        jobs_.emplace(id, std::move(job));
        if (!workers_.empty()) pending_.push_back(id);
    }
    if (workers_.empty()) {
        run(id);
    } else {
        queued_.notify_one();
    }
    return id;
}

void JobQueue::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(mutex_);
            queued_.wait(lock, [this] { return stopping_ || !pending_.empty(); });
            if (pending_.empty()) return;
            id = pending_.front();
            pending_.pop_front();
        }
        run(id);
    }
}

void JobQueue::run(const std::string& id) {
    std::function<json()> work;
    {
        std::lock_guard lock(mutex_);
        work = std::move(jobs_.at(id).work);
    }
    json result;
    json error;
    try {
        result = work();
    } catch (const Error& ex) {
        error = error_body(ex);
    } catch (const std::exception& ex) {
        spdlog::error("job {} crashed: {}", id, ex.what());
        error = error_body(Error(ErrorCode::Internal, ex.what()));
    }
    {
        std::lock_guard lock(mutex_);
        auto& job = jobs_.at(id);
        if (error.is_null()) {
            job.status = JobStatus::Done;
            job.result = std::move(result);
        } else {
            job.status = JobStatus::Failed;
            job.error = std::move(error);
        }
    }
    settled_.notify_all();
}

json JobQueue::document(const std::string& id, const Job& job) const {
    json doc{{"job_id", id}, {"kind", job.kind}, {"status", to_string(job.status)}};
    if (job.status == JobStatus::Done) doc["result"] = job.result;
    if (job.status == JobStatus::Failed) doc["error"] = job.error;
    return doc;
}

json JobQueue::poll(const std::string& job_id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(ErrorCode::UnknownJob, "no job " + job_id, json{{"job_id", job_id}});
    return document(it->first, it->second);
}

json JobQueue::wait(const std::string& job_id) const {
    std::unique_lock lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(ErrorCode::UnknownJob, "no job " + job_id, json{{"job_id", job_id}});
    settled_.wait(lock, [&] { return it->second.status != JobStatus::Pending; });
    return document(it->first, it->second);
}

}  // namespace lessonweave::api
