#pragma once

#include "lessonweave/common.hpp"
#include "lessonweave/error.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lessonweave::api {

enum class JobStatus { Pending, Done, Failed };

std::string_view to_string(JobStatus status);

// {"code","message","detail"} for an error crossing the API boundary.
json error_body(const Error& error);

// Generation work handed off by the router. A job moves from pending to done
// or failed exactly once and its document never changes afterwards.
class JobQueue {
public:
    // workers == 0 runs each job inside submit().
    explicit JobQueue(std::size_t workers = 2);
    ~JobQueue();

    JobQueue(const JobQueue&) = delete;
    JobQueue& operator=(const JobQueue&) = delete;

    std::string submit(std::string kind, std::function<json()> work);

    // {"job_id","kind","status"} plus "result" when done or "error" when failed.
    // Throws UnknownJob.
    json poll(const std::string& job_id) const;
    // Blocks until the job has settled, then polls it.
    json wait(const std::string& job_id) const;

private:
    struct Job {
        std::string kind;
        JobStatus status = JobStatus::Pending;
        json result;
        json error;
        std::function<json()> work;
    };

    void run(const std::string& id);
    void worker_loop();
    json document(const std::string& id, const Job& job) const;

    mutable std::mutex mutex_;
    mutable std::condition_variable settled_;
    std::condition_variable queued_;
    std::map<std::string, Job> jobs_;
    std::deque<std::string> pending_;
    std::size_t next_ = 1;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

}  // namespace lessonweave::api
