#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "ursa/annotation.hpp"
#include "ursa/compositor.hpp"
#include "ursa/taxonomy.hpp"

namespace httplib {
class Server;
}

namespace ursa::service {

using annotation::AnnotationTask;
using annotation::TaskId;

/// Milliseconds since the epoch; injectable for tests.
using Clock = std::function<std::int64_t()>;
Clock system_clock();

struct ServiceOptions {
    std::size_t votes_per_task = 7;  // distinct workers per task (target k)
    std::optional<std::filesystem::path> data_dir;  // holds votes.jsonl and leases.jsonl
};

struct VoteInput {
    FmssId fmss;
    int class_id = 0;
};

enum class SubmitStatus { accepted, expired, no_lease, unknown_task, invalid };

struct SubmitResult {
    SubmitStatus status = SubmitStatus::accepted;
    std::size_t accepted = 0;
    std::string message;
};

struct Progress {
    std::size_t tasks_total = 0;
    std::size_t tasks_outstanding = 0;  // fewer completed submissions than the quota
    std::size_t active_leases = 0;
    std::map<std::size_t, std::size_t> ballot_histogram;  // votes per FMSS -> FMSS count
    std::size_t remaining_votes = 0;                      // to reach the quota on every FMSS
    std::size_t target_votes = 0;

    bool operator==(const Progress&) const = default;
};

nlohmann::json progress_json(const Progress& p);

/// Task dispatch and vote intake. All state changes happen under one lock
/// and are appended to the logs before the call returns, so a restart from
/// the same data directory reproduces the same state.
class AnnotationService {
public:
    AnnotationService(std::vector<AnnotationTask> tasks, taxonomy::ClassTaxonomy classes,
                      compositor::Palette palette, ServiceOptions options = {}, Clock clock = system_clock());

    /// Lowest-id task this worker has never leased and whose quota is not
    /// exhausted. A worker with a live lease gets that lease back.
    std::optional<nlohmann::json> next_task(const std::string& worker);

    /// Validates the whole submission before recording anything.
    SubmitResult submit_votes(const std::string& worker, TaskId task, std::span<const VoteInput> votes);

    Progress progress() const;
    std::vector<annotation::Ballot> ballots() const { return store_.snapshot(); }
    const std::vector<AnnotationTask>& tasks() const { return tasks_; }

private:
    enum class LeaseState { active, completed };
    struct Lease {
        std::int64_t start_ms = 0;
        std::int64_t deadline_ms = 0;
        LeaseState state = LeaseState::active;
    };

    bool live(const Lease& l, std::int64_t now) const { return l.state == LeaseState::active && now <= l.deadline_ms; }
    std::size_t occupancy(TaskId task, std::int64_t now) const;
    nlohmann::json payload(const AnnotationTask& task, const Lease& lease) const;
    void log_lease_event(const char* event, const std::string& worker, TaskId task, std::int64_t ts);
    void replay_leases(const std::filesystem::path& path);

    std::vector<AnnotationTask> tasks_;
    std::map<TaskId, std::size_t> task_index_;
    taxonomy::ClassTaxonomy classes_;
    compositor::Palette palette_;
    ServiceOptions options_;
    Clock clock_;
    annotation::VoteStore store_;

    mutable std::shared_mutex mutex_;
    std::map<std::pair<TaskId, std::string>, Lease> leases_;
    std::optional<std::ofstream> lease_log_;
};

/// Relative URL of the overlay image for one segment.
std::string overlay_path(const annotation::Segment& seg);

/// HTTP facade:
///   GET  /api/task?worker=ID  -> payload JSON, or 204 when nothing is left
///   POST /api/votes           -> {"accepted":n}; 409 expired, 422 invalid,
///                                403 no lease, 404 unknown task, 400 bad body
///   GET  /api/progress        -> progress JSON
///   GET  /static/...          -> files under <static_dir>
class HttpServer {
public:
    HttpServer(AnnotationService& service, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();

private:
    AnnotationService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace ursa::service
