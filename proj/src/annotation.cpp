#include "ursa/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"
#include "ursa/error.hpp"
#include "ursa/random.hpp"

namespace ursa::annotation {

using nlohmann::json;

std::vector<AnnotationTask> build_tasks(std::span<const Segment> segments, const TaskLimits& limits) {
    if (limits.max_scenes == 0 || limits.max_segments == 0) {
        throw Error(ErrorCode::invalid_argument, "task caps must be positive");
    }
    std::vector<Segment> sorted(segments.begin(), segments.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Segment& l, const Segment& r) { return l.scene_id < r.scene_id; });

    std::vector<AnnotationTask> tasks;
    AnnotationTask current;
    auto close = [&] {
        if (current.segments.empty()) return;
        current.task_id = static_cast<TaskId>(tasks.size());
        current.time_limit_min = limits.time_limit_min;
        tasks.push_back(std::move(current));
        current = {};
    };
    for (const auto& seg : sorted) {
        const bool new_scene = current.scene_ids.empty() || current.scene_ids.back() != seg.scene_id;
        if (current.segments.size() == limits.max_segments ||
            (new_scene && current.scene_ids.size() == limits.max_scenes)) {
            close();
        }
        if (current.scene_ids.empty() || current.scene_ids.back() != seg.scene_id) {
            current.scene_ids.push_back(seg.scene_id);
        }
        current.segments.push_back(seg);
    }
    close();
    return tasks;
}

namespace {

json segment_json(const Segment& s) {
    return {{"fmss", s.fmss},
            {"scene_id", s.scene_id},
            {"pixel_count", s.pixel_count},
            {"bbox", {s.bbox.x0, s.bbox.y0, s.bbox.x1, s.bbox.y1}}};
}

Segment segment_from_json(const json& j) {
    Segment s;
    s.fmss = j.at("fmss").get<FmssId>();
    s.scene_id = j.at("scene_id").get<SceneId>();
    s.pixel_count = j.value("pixel_count", std::uint64_t{1});
    if (s.pixel_count == 0) throw Error(ErrorCode::invalid_argument, "segment pixel count must be positive");
    if (j.contains("bbox")) {
        const auto& b = j["bbox"];
        s.bbox = {b.at(0).get<std::int32_t>(), b.at(1).get<std::int32_t>(), b.at(2).get<std::int32_t>(),
                  b.at(3).get<std::int32_t>()};
    }
    return s;
}

json parse_json(std::string_view source) {
    try {
        return json::parse(source);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse_error, e.what(), "byte " + std::to_string(e.byte));
    }
}

}  // namespace

std::string serialize_tasks(std::span<const AnnotationTask> tasks) {
    json doc{{"tasks", json::array()}};
    for (const auto& t : tasks) {
        json jt{{"task_id", t.task_id}, {"time_limit_min", t.time_limit_min}, {"scene_ids", t.scene_ids}};
        jt["segments"] = json::array();
        for (const auto& s : t.segments) jt["segments"].push_back(segment_json(s));
        doc["tasks"].push_back(std::move(jt));
    }
    return doc.dump(2) + "\n";
}

std::vector<AnnotationTask> parse_tasks(std::string_view source) {
    const auto doc = parse_json(source);
    std::vector<AnnotationTask> tasks;
    try {
        for (const auto& jt : doc.at("tasks")) {
            AnnotationTask t;
            t.task_id = jt.at("task_id").get<TaskId>();
            t.time_limit_min = jt.value("time_limit_min", 20);
            for (const auto& js : jt.at("segments")) {
                t.segments.push_back(segment_from_json(js));
                if (std::find(t.scene_ids.begin(), t.scene_ids.end(), t.segments.back().scene_id) == t.scene_ids.end()) {
                    t.scene_ids.push_back(t.segments.back().scene_id);
                }
            }
            tasks.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what(), "$.tasks");
    }
    return tasks;
}

std::vector<Segment> parse_segments(std::string_view source) {
    const auto doc = parse_json(source);
    std::vector<Segment> out;
    try {
        for (const auto& js : doc.at("segments")) out.push_back(segment_from_json(js));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what(), "$.segments");
    }
    return out;
}

std::string vote_to_json_line(const Vote& v) {
    return json{{"fmss", v.fmss}, {"class_id", v.class_id}, {"worker", v.worker}, {"ts_ms", v.ts_ms}}.dump();
}

Vote vote_from_json_line(std::string_view line) {
    const auto j = parse_json(line);
    try {
        Vote v;
        v.fmss = j.at("fmss").get<FmssId>();
        const int cls = j.at("class_id").get<int>();
        if (cls < 0 || cls > 255) throw Error(ErrorCode::invalid_class, "class id out of range");
        v.class_id = static_cast<ClassId>(cls);
        v.worker = j.at("worker").get<std::string>();
        v.ts_ms = j.at("ts_ms").get<std::int64_t>();
        return v;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what());
    }
}

std::vector<Vote> read_vote_log(const std::filesystem::path& path) {
    std::vector<Vote> votes;
    std::ifstream in(path, std::ios::binary);
    if (!in) return votes;
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        ++line_no;
        if (nl == std::string::npos) break;  // unterminated tail: torn write
        const std::string_view line(text.data() + pos, nl - pos);
        pos = nl + 1;
        if (detail::trim(line).empty()) continue;
        try {
            votes.push_back(vote_from_json_line(line));
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), path.string() + ":" + std::to_string(line_no));
        }
    }
    return votes;
}

VoteStore::VoteStore(std::size_t class_count, std::optional<std::filesystem::path> log_path)
    : class_count_(class_count) {
    if (log_path) {
        log_.emplace(*log_path, std::ios::binary | std::ios::app);
        if (!*log_) throw Error(ErrorCode::io_error, "cannot open vote log " + log_path->string());
    }
}

RecordResult VoteStore::insert_locked(const Vote& vote, bool log) {
    if (!seen_.emplace(vote.worker, vote.fmss, vote.ts_ms).second) {
        return {false, ballots_.at(vote.fmss).votes.size()};
    }
    auto [it, fresh] = ballots_.try_emplace(vote.fmss);
    if (fresh) it->second.fmss = vote.fmss;
    auto& votes = it->second.votes;
    const auto pos = std::upper_bound(votes.begin(), votes.end(), vote.ts_ms,
                                      [](std::int64_t ts, const Vote& v) { return ts < v.ts_ms; });
    votes.insert(pos, vote);
    voters_[vote.fmss].insert(vote.worker);
    if (log && log_) {
        *log_ << vote_to_json_line(vote) << '\n';
        log_->flush();
        if (!*log_) throw Error(ErrorCode::io_error, "vote log write failed");
    }
    return {true, votes.size()};
}

RecordResult VoteStore::record_vote(const Vote& vote) {
    if (vote.class_id >= class_count_) {
        throw Error(ErrorCode::invalid_class, "class id " + std::to_string(vote.class_id) + " is outside the " +
                                                  std::to_string(class_count_) + "-class taxonomy");
    }
    std::unique_lock lock(mutex_);
    return insert_locked(vote, true);
}

std::size_t VoteStore::record_batch(std::span<const Vote> votes) {
    for (const auto& v : votes) {
        if (v.class_id >= class_count_) {
            throw Error(ErrorCode::invalid_class, "class id " + std::to_string(v.class_id) + " is outside the taxonomy");
        }
    }
    std::unique_lock lock(mutex_);
    std::size_t appended = 0;
    for (const auto& v : votes) appended += insert_locked(v, true).appended ? 1 : 0;
    return appended;
}

void VoteStore::replay(std::span<const Vote> votes) {
    std::unique_lock lock(mutex_);
    for (const auto& v : votes) {
        if (v.class_id >= class_count_) {
            throw Error(ErrorCode::invalid_class, "logged vote has class " + std::to_string(v.class_id) +
                                                      " outside the taxonomy");
        }
        insert_locked(v, false);
    }
}

bool VoteStore::has_voted(const std::string& worker, const FmssId& fmss) const {
    std::shared_lock lock(mutex_);
    auto it = voters_.find(fmss);
    return it != voters_.end() && it->second.contains(worker);
}

std::optional<Ballot> VoteStore::ballot(const FmssId& fmss) const {
    std::shared_lock lock(mutex_);
    auto it = ballots_.find(fmss);
    if (it == ballots_.end()) return std::nullopt;
    return it->second;
}

std::vector<Ballot> VoteStore::snapshot() const {
    std::shared_lock lock(mutex_);
    std::vector<Ballot> out;
    out.reserve(ballots_.size());
    for (const auto& [id, b] : ballots_) out.push_back(b);
    return out;
}

std::optional<ClassId> plurality(std::span<const Vote> votes) {
    if (votes.empty()) return std::nullopt;
    struct Tally {
        std::size_t count = 0;
        std::int64_t first_ts = 0;
    };
    std::map<ClassId, Tally> tally;
    for (const auto& v : votes) {
        auto [it, fresh] = tally.try_emplace(v.class_id);
        if (fresh || v.ts_ms < it->second.first_ts) it->second.first_ts = v.ts_ms;
        ++it->second.count;
    }
    auto best = tally.begin();
    for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
        if (it->second.count > best->second.count ||
            (it->second.count == best->second.count && it->second.first_ts < best->second.first_ts)) {
            best = it;
        }
    }
    return best->first;
}

FmssLabeling aggregate_labels(std::span<const Ballot> ballots) {
    FmssLabeling out;
    for (const auto& b : ballots) out[b.fmss] = plurality(b.votes).value_or(compositor::kUnlabeled);
    return out;
}

AccuracyCurve accuracy_vs_votes(std::span<const Ballot> ballots, int k_max) {
    if (k_max < 1) throw Error(ErrorCode::invalid_argument, "k_max must be at least 1");
    std::vector<std::vector<Vote>> eligible;
    std::vector<ClassId> gold;
    for (const auto& b : ballots) {
        if (!b.gold || b.votes.size() < static_cast<std::size_t>(k_max)) continue;
        auto votes = b.votes;
        std::stable_sort(votes.begin(), votes.end(), [](const Vote& l, const Vote& r) { return l.ts_ms < r.ts_ms; });
        eligible.push_back(std::move(votes));
        gold.push_back(*b.gold);
    }
    if (eligible.empty()) {
        throw Error(ErrorCode::no_eligible_ballots, "no ballot has a gold label and " + std::to_string(k_max) + " votes");
    }
    AccuracyCurve curve;
    const double n = static_cast<double>(eligible.size());
    for (int k = 1; k <= k_max; ++k) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < eligible.size(); ++i) {
            const auto first_k = std::span<const Vote>(eligible[i]).first(static_cast<std::size_t>(k));
            if (plurality(first_k) == gold[i]) ++correct;
        }
        const double acc = static_cast<double>(correct) / n;
        curve.push_back({k, acc, std::sqrt(acc * (1.0 - acc) / n), eligible.size()});
    }
    return curve;
}

AccuracyCurve parse_curve_csv(std::string_view csv) {
    AccuracyCurve curve;
    for (const auto& row : detail::read_csv(csv, "k,accuracy,stderr")) {
        const std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != 3) throw Error(ErrorCode::parse_error, "expected 'k,accuracy,stderr'", where);
        CurvePoint p;
        p.k = detail::parse_int<int>(row.fields[0], where);
        p.accuracy = detail::parse_double(row.fields[1], where);
        p.std_error = detail::parse_double(row.fields[2], where);
        if (!curve.empty() && p.k <= curve.back().k) throw Error(ErrorCode::parse_error, "k must increase", where);
        curve.push_back(p);
    }
    return curve;
}

std::string curve_to_csv(const AccuracyCurve& curve) {
    std::string out = "k,accuracy,stderr\n";
    for (const auto& p : curve) {
        // JSON number formatting gives shortest round-trip text
        out += std::to_string(p.k) + "," + json(p.accuracy).dump() + "," + json(p.std_error).dump() + "\n";
    }
    return out;
}

std::vector<double> isotonic_fit(std::span<const double> values) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    for (double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() >= 2 && blocks[blocks.size() - 2].mean() > blocks.back().mean()) {
            const Block last = blocks.back();
            blocks.pop_back();
            blocks.back().sum += last.sum;
            blocks.back().count += last.count;
        }
    }
    std::vector<double> fitted;
    fitted.reserve(values.size());
    for (const auto& b : blocks) fitted.insert(fitted.end(), b.count, b.mean());
    return fitted;
}

std::optional<int> diminishing_returns_point(const AccuracyCurve& curve, double target) {
    std::vector<double> acc;
    acc.reserve(curve.size());
    for (const auto& p : curve) acc.push_back(p.accuracy);
    const auto fitted = isotonic_fit(acc);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (fitted[i] >= target) return curve[i].k;
    }
    return std::nullopt;
}

std::vector<Ballot> simulate_votes(const FmssLabeling& gold, const AnnotatorModel& model, int votes_per_fmss) {
    if (votes_per_fmss < 1) throw Error(ErrorCode::invalid_argument, "votes per FMSS must be at least 1");
    if (!(model.accuracy >= 0.0 && model.accuracy <= 1.0)) {
        throw Error(ErrorCode::invalid_argument, "annotator accuracy must be in [0, 1]");
    }
    if (model.class_count < 2 || model.class_count > compositor::kUnlabeled) {
        throw Error(ErrorCode::invalid_argument, "class count must be in [2, 255]");
    }
    Rng rng(model.seed);
    std::vector<Ballot> ballots;
    ballots.reserve(gold.size());
    for (const auto& [fmss, truth] : gold) {
        if (truth >= model.class_count) {
            throw Error(ErrorCode::invalid_class, "gold class " + std::to_string(truth) + " outside the model's classes");
        }
        Ballot b;
        b.fmss = fmss;
        b.gold = truth;
        for (int j = 0; j < votes_per_fmss; ++j) {
            ClassId cls = truth;
            if (!(rng.uniform() < model.accuracy)) {
                const auto r = static_cast<ClassId>(rng.below(model.class_count - 1));
                cls = r < truth ? r : static_cast<ClassId>(r + 1);
            }
            b.votes.push_back({fmss, cls, "sim-" + std::to_string(j), j + 1});
        }
        ballots.push_back(std::move(b));
    }
    return ballots;
}

VoteStats vote_stats(std::span<const Ballot> ballots, std::uint32_t max_scene_count) {
    VoteStats stats;
    stats.total = ballots.size();
    std::size_t votes = 0;
    for (const auto& b : ballots) {
        if (b.scene_count <= max_scene_count) {
            ++stats.eligible;
            votes += b.votes.size();
        } else {
            ++stats.excluded;
        }
    }
    if (stats.eligible > 0) stats.mean_votes = static_cast<double>(votes) / static_cast<double>(stats.eligible);
    if (stats.total > 0) {
        stats.excluded_fraction = static_cast<double>(stats.excluded) / static_cast<double>(stats.total);
        stats.threshold_percentile = static_cast<double>(stats.eligible) / static_cast<double>(stats.total);
    }
    return stats;
}

std::string serialize_ballots(std::span<const Ballot> ballots) {
    json doc{{"ballots", json::array()}};
    for (const auto& b : ballots) {
        json jb{{"fmss", b.fmss}, {"scene_count", b.scene_count}};
        jb["gold"] = b.gold ? json(*b.gold) : json(nullptr);
        jb["votes"] = json::array();
        for (const auto& v : b.votes) {
            jb["votes"].push_back({{"class_id", v.class_id}, {"worker", v.worker}, {"ts_ms", v.ts_ms}});
        }
        doc["ballots"].push_back(std::move(jb));
    }
    return doc.dump(2) + "\n";
}

namespace {

ClassId class_field(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < 0 || j.get<std::int64_t>() >= compositor::kUnlabeled) {
        throw Error(ErrorCode::invalid_class, "class id must be an integer in [0, 254]", where);
    }
    return static_cast<ClassId>(j.get<int>());
}

}  // namespace

std::vector<Ballot> parse_ballots(std::string_view source) {
    const auto doc = parse_json(source);
    std::vector<Ballot> out;
    try {
        const auto& arr = doc.at("ballots");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& jb = arr[i];
            Ballot b;
            b.fmss = jb.at("fmss").get<FmssId>();
            b.scene_count = jb.value("scene_count", std::uint32_t{1});
            const std::string where = "$.ballots[" + std::to_string(i) + "]";
            if (jb.contains("gold") && !jb["gold"].is_null()) b.gold = class_field(jb["gold"], where + ".gold");
            for (const auto& jv : jb.at("votes")) {
                b.votes.push_back({b.fmss, class_field(jv.at("class_id"), where + ".votes"),
                                   jv.value("worker", std::string{}), jv.value("ts_ms", std::int64_t{0})});
            }
            std::stable_sort(b.votes.begin(), b.votes.end(),
                             [](const Vote& l, const Vote& r) { return l.ts_ms < r.ts_ms; });
            out.push_back(std::move(b));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what(), "$.ballots");
    }
    return out;
}

}  // namespace ursa::annotation
