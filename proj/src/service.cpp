#include "ursa/service.hpp"

#include <chrono>
#include <set>
#include <sstream>

#include "httplib.h"
#include "ursa/error.hpp"

namespace ursa::service {

using nlohmann::json;

Clock system_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

json progress_json(const Progress& p) {
    json hist = json::object();
    for (const auto& [votes, count] : p.ballot_histogram) hist[std::to_string(votes)] = count;
    return {{"tasks_total", p.tasks_total},
            {"tasks_outstanding", p.tasks_outstanding},
            {"active_leases", p.active_leases},
            {"ballot_histogram", hist},
            {"remaining_votes", p.remaining_votes},
            {"target_votes", p.target_votes}};
}

namespace {

std::optional<std::filesystem::path> votes_log_path(const ServiceOptions& o) {
    if (!o.data_dir) return std::nullopt;
    std::filesystem::create_directories(*o.data_dir);
    return *o.data_dir / "votes.jsonl";
}

std::string hex_hash(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

}  // namespace

std::string overlay_path(const annotation::Segment& seg) {
    return "/static/overlays/" + std::to_string(seg.scene_id) + "/" + hex_hash(to_string(seg.fmss)) + ".png";
}

AnnotationService::AnnotationService(std::vector<AnnotationTask> tasks, taxonomy::ClassTaxonomy classes,
                                     compositor::Palette palette, ServiceOptions options, Clock clock)
    : tasks_(std::move(tasks)),
      classes_(std::move(classes)),
      palette_(std::move(palette)),
      options_(std::move(options)),
      clock_(std::move(clock)),
      store_(classes_.size(), votes_log_path(options_)) {
    if (options_.votes_per_task == 0) throw Error(ErrorCode::invalid_argument, "votes per task must be positive");
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        if (!task_index_.emplace(tasks_[i].task_id, i).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate task id " + std::to_string(tasks_[i].task_id));
        }
    }
    if (options_.data_dir) {
        store_.replay(annotation::read_vote_log(*options_.data_dir / "votes.jsonl"));
        const auto lease_path = *options_.data_dir / "leases.jsonl";
        replay_leases(lease_path);
        lease_log_.emplace(lease_path, std::ios::binary | std::ios::app);
        if (!*lease_log_) throw Error(ErrorCode::io_error, "cannot open lease log " + lease_path.string());
    }
}

void AnnotationService::replay_leases(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return;
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // torn tail
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::parse_error, e.what(), path.string());
        }
        const auto event = j.at("event").get<std::string>();
        const auto key = std::pair{j.at("task_id").get<TaskId>(), j.at("worker").get<std::string>()};
        const auto ts = j.at("ts_ms").get<std::int64_t>();
        if (event == "lease") {
            const auto it = task_index_.find(key.first);
            const int limit = it == task_index_.end() ? 20 : tasks_[it->second].time_limit_min;
            leases_[key] = {ts, ts + std::int64_t{limit} * 60'000, LeaseState::active};
        } else if (event == "complete") {
            leases_[key].state = LeaseState::completed;
        }
    }
}

void AnnotationService::log_lease_event(const char* event, const std::string& worker, TaskId task, std::int64_t ts) {
    if (!lease_log_) return;
    *lease_log_ << json{{"event", event}, {"worker", worker}, {"task_id", task}, {"ts_ms", ts}}.dump() << '\n';
    lease_log_->flush();
    if (!*lease_log_) throw Error(ErrorCode::io_error, "lease log write failed");
}

std::size_t AnnotationService::occupancy(TaskId task, std::int64_t now) const {
    std::size_t n = 0;
    for (auto it = leases_.lower_bound({task, std::string{}}); it != leases_.end() && it->first.first == task; ++it) {
        if (it->second.state == LeaseState::completed || live(it->second, now)) ++n;
    }
    return n;
}

json AnnotationService::payload(const AnnotationTask& task, const Lease& lease) const {
    json segments = json::array();
    for (const auto& s : task.segments) {
        segments.push_back({{"fmss", s.fmss},
                            {"scene_id", s.scene_id},
                            {"image", "/static/scenes/" + std::to_string(s.scene_id) + ".png"},
                            {"overlay", overlay_path(s)},
                            {"pixel_count", s.pixel_count},
                            {"bbox", {s.bbox.x0, s.bbox.y0, s.bbox.x1, s.bbox.y1}}});
    }
    json classes = json::array();
    for (const auto& c : classes_.classes()) {
        json row{{"id", c.id}, {"name", c.name}};
        if (palette_.contains(c.id)) {
            const auto rgb = palette_.color(c.id);
            row["rgb"] = {rgb[0], rgb[1], rgb[2]};
        }
        classes.push_back(std::move(row));
    }
    return {{"task_id", task.task_id},
            {"scene_ids", task.scene_ids},
            {"segments", std::move(segments)},
            {"classes", std::move(classes)},
            {"time_limit_min", task.time_limit_min},
            {"lease_start_ms", lease.start_ms},
            {"deadline_ms", lease.deadline_ms}};
}

std::optional<json> AnnotationService::next_task(const std::string& worker) {
    std::unique_lock lock(mutex_);
    const auto now = clock_();
    for (const auto& [key, lease] : leases_) {
        if (key.second == worker && live(lease, now)) return payload(tasks_[task_index_.at(key.first)], lease);
    }
    for (const auto& [id, idx] : task_index_) {
        if (leases_.contains({id, worker})) continue;
        if (occupancy(id, now) >= options_.votes_per_task) continue;
        const auto& task = tasks_[idx];
        Lease lease{now, now + std::int64_t{task.time_limit_min} * 60'000, LeaseState::active};
        log_lease_event("lease", worker, id, now);
        leases_[{id, worker}] = lease;
        return payload(task, lease);
    }
    return std::nullopt;
}

SubmitResult AnnotationService::submit_votes(const std::string& worker, TaskId task_id,
                                             std::span<const VoteInput> votes) {
    std::unique_lock lock(mutex_);
    const auto now = clock_();
    const auto task_it = task_index_.find(task_id);
    if (task_it == task_index_.end()) {
        return {SubmitStatus::unknown_task, 0, "unknown task " + std::to_string(task_id)};
    }
    auto lease_it = leases_.find({task_id, worker});
    if (lease_it == leases_.end() || lease_it->second.state == LeaseState::completed) {
        return {SubmitStatus::no_lease, 0, "worker holds no open lease on this task"};
    }
    if (now > lease_it->second.deadline_ms) {
        return {SubmitStatus::expired, 0, "lease expired"};
    }

    const auto& task = tasks_[task_it->second];
    std::set<FmssId> in_task;
    for (const auto& s : task.segments) in_task.insert(s.fmss);

    std::vector<annotation::Vote> accepted;
    std::set<FmssId> batch;
    for (std::size_t i = 0; i < votes.size(); ++i) {
        const auto& v = votes[i];
        if (!classes_.contains(v.class_id)) {
            return {SubmitStatus::invalid, 0, "vote " + std::to_string(i) + ": invalid class " + std::to_string(v.class_id)};
        }
        if (!in_task.contains(v.fmss)) {
            return {SubmitStatus::invalid, 0, "vote " + std::to_string(i) + ": FMSS not part of the task"};
        }
        // One vote per worker per FMSS, even when it recurs in other tasks.
        if (!batch.insert(v.fmss).second || store_.has_voted(worker, v.fmss)) continue;
        accepted.push_back({v.fmss, static_cast<annotation::ClassId>(v.class_id), worker, now});
    }

    const std::size_t n = store_.record_batch(accepted);
    log_lease_event("complete", worker, task_id, now);
    lease_it->second.state = LeaseState::completed;
    return {SubmitStatus::accepted, n, {}};
}

Progress AnnotationService::progress() const {
    std::shared_lock lock(mutex_);
    const auto now = clock_();
    Progress p;
    p.tasks_total = tasks_.size();
    p.target_votes = options_.votes_per_task;
    std::map<TaskId, std::size_t> completed;
    for (const auto& [key, lease] : leases_) {
        if (lease.state == LeaseState::completed) ++completed[key.first];
        if (live(lease, now)) ++p.active_leases;
    }
    for (const auto& t : tasks_) {
        if (completed[t.task_id] < options_.votes_per_task) ++p.tasks_outstanding;
    }
    std::map<FmssId, std::size_t> counts;
    for (const auto& t : tasks_) {
        for (const auto& s : t.segments) counts.emplace(s.fmss, 0);
    }
    for (const auto& b : store_.snapshot()) {
        ++p.ballot_histogram[b.votes.size()];
        counts[b.fmss] = b.votes.size();
    }
    for (const auto& [id, n] : counts) {
        if (n < options_.votes_per_task) p.remaining_votes += options_.votes_per_task - n;
    }
    return p;
}

HttpServer::HttpServer(AnnotationService& service, std::optional<std::filesystem::path> static_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    server_->Get("/api/task", [this](const httplib::Request& req, httplib::Response& res) {
        const auto worker = req.get_param_value("worker");
        if (worker.empty()) {
            res.status = 400;
            res.set_content(json{{"error", "missing worker"}}.dump(), "application/json");
            return;
        }
        const auto payload = service_.next_task(worker);
        if (!payload) {
            res.status = 204;
            return;
        }
        res.set_content(payload->dump(), "application/json");
    });

    server_->Post("/api/votes", [this](const httplib::Request& req, httplib::Response& res) {
        auto reply = [&res](int status, const json& body) {
            res.status = status;
            res.set_content(body.dump(), "application/json");
        };
        std::string worker;
        TaskId task = 0;
        std::vector<VoteInput> votes;
        try {
            const auto body = json::parse(req.body);
            worker = body.at("worker").get<std::string>();
            task = body.at("task_id").get<TaskId>();
            for (const auto& v : body.at("votes")) {
                const auto& cls = v.at("class_id");
                if (!cls.is_number_integer()) {
                    reply(422, {{"error", "invalid"}, {"message", "class_id must be an integer"}});
                    return;
                }
                votes.push_back({v.at("fmss").get<FmssId>(), cls.get<int>()});
            }
        } catch (const std::exception& e) {
            reply(400, {{"error", "bad_request"}, {"message", e.what()}});
            return;
        }
        const auto result = service_.submit_votes(worker, task, votes);
        switch (result.status) {
            case SubmitStatus::accepted: reply(200, {{"accepted", result.accepted}}); break;
            case SubmitStatus::expired: reply(409, {{"error", "expired"}, {"message", result.message}}); break;
            case SubmitStatus::invalid: reply(422, {{"error", "invalid"}, {"message", result.message}}); break;
            case SubmitStatus::no_lease: reply(403, {{"error", "no_lease"}, {"message", result.message}}); break;
            case SubmitStatus::unknown_task: reply(404, {{"error", "unknown_task"}, {"message", result.message}}); break;
        }
    });

    server_->Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(progress_json(service_.progress()).dump(), "application/json");
    });

    if (static_dir && std::filesystem::is_directory(*static_dir)) {
        server_->set_mount_point("/static", static_dir->string());
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

void HttpServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace ursa::service
