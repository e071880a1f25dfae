#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ursa/compositor.hpp"
#include "ursa/fmss.hpp"

namespace ursa::annotation {

using compositor::ClassId;
using compositor::FmssLabeling;
using SceneId = std::int64_t;
using TaskId = std::int64_t;

struct BoundingBox {
    std::int32_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool operator==(const BoundingBox&) const = default;
};

/// One FMSS section as it appears in one scene snapshot.
struct Segment {
    FmssId fmss;
    SceneId scene_id = 0;
    std::uint64_t pixel_count = 1;
    BoundingBox bbox;
    bool operator==(const Segment&) const = default;
};

struct TaskLimits {
    std::size_t max_scenes = 6;
    std::size_t max_segments = 270;
    int time_limit_min = 20;
};

struct AnnotationTask {
    TaskId task_id = 0;
    std::vector<SceneId> scene_ids;  // in packing order
    std::vector<Segment> segments;
    int time_limit_min = 20;
};

/// Greedy packing by scene then segment. A task is closed when the next
/// segment would exceed the segment cap or bring in one scene too many; a
/// scene larger than the segment cap spills into the following task.
std::vector<AnnotationTask> build_tasks(std::span<const Segment> segments, const TaskLimits& limits = {});

/// Tasks file: {"tasks":[{"task_id","time_limit_min","scene_ids","segments":[...]}]}
std::string serialize_tasks(std::span<const AnnotationTask> tasks);
std::vector<AnnotationTask> parse_tasks(std::string_view source);
/// Segments file: {"segments":[{"fmss","scene_id","pixel_count","bbox":[x0,y0,x1,y1]}]}
std::vector<Segment> parse_segments(std::string_view source);

struct Vote {
    FmssId fmss;
    ClassId class_id = 0;
    std::string worker;
    std::int64_t ts_ms = 0;
    bool operator==(const Vote&) const = default;
};

struct Ballot {
    FmssId fmss;
    std::vector<Vote> votes;  // ascending ts_ms
    std::optional<ClassId> gold;
    std::uint32_t scene_count = 1;
};

/// One line of the votes log.
std::string vote_to_json_line(const Vote& v);
Vote vote_from_json_line(std::string_view line);
/// Reads a votes log; a torn final line (crash mid-append) is ignored.
std::vector<Vote> read_vote_log(const std::filesystem::path& path);

struct RecordResult {
    bool appended = false;
    std::size_t ballot_size = 0;
};

/// Thread-safe ballot store. Votes are kept per FMSS in timestamp order and,
/// when a log path is given, appended to a newline-delimited JSON log before
/// the call returns.
class VoteStore {
public:
    explicit VoteStore(std::size_t class_count, std::optional<std::filesystem::path> log_path = std::nullopt);

    /// Throws invalid_class for ids outside the taxonomy. Resubmitting the
    /// same (worker, fmss, ts_ms) is a no-op.
    RecordResult record_vote(const Vote& vote);

    /// Records all votes or none: every class id is validated first.
    std::size_t record_batch(std::span<const Vote> votes);

    /// Loads votes without logging them again (log replay).
    void replay(std::span<const Vote> votes);

    bool has_voted(const std::string& worker, const FmssId& fmss) const;
    std::optional<Ballot> ballot(const FmssId& fmss) const;
    /// Consistent copy of every ballot, ordered by FmssId.
    std::vector<Ballot> snapshot() const;
    std::size_t class_count() const { return class_count_; }

private:
    RecordResult insert_locked(const Vote& vote, bool log);

    std::size_t class_count_;
    mutable std::shared_mutex mutex_;
    std::map<FmssId, Ballot> ballots_;
    std::map<FmssId, std::set<std::string>> voters_;
    std::set<std::tuple<std::string, FmssId, std::int64_t>> seen_;
    std::optional<std::ofstream> log_;
};

/// Plurality class of the votes; ties go to the class whose earliest vote
/// came first (then the smaller id). nullopt for no votes.
std::optional<ClassId> plurality(std::span<const Vote> votes);

FmssLabeling aggregate_labels(std::span<const Ballot> ballots);

struct CurvePoint {
    int k = 0;
    double accuracy = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};
using AccuracyCurve = std::vector<CurvePoint>;

/// Plurality over the first k votes against gold, k = 1..k_max, on ballots
/// with a gold label and at least k_max votes. std_error is the binomial
/// standard error sqrt(a(1-a)/n).
AccuracyCurve accuracy_vs_votes(std::span<const Ballot> ballots, int k_max);

/// CSV "k,accuracy,stderr".
AccuracyCurve parse_curve_csv(std::string_view csv);
std::string curve_to_csv(const AccuracyCurve& curve);

/// Least-squares nondecreasing fit (pool adjacent violators, equal weights).
std::vector<double> isotonic_fit(std::span<const double> values);

/// Smallest k whose isotonic-fitted accuracy reaches target.
std::optional<int> diminishing_returns_point(const AccuracyCurve& curve, double target = 0.75);

struct AnnotatorModel {
    double accuracy = 0.75;     // probability a vote is the gold class
    std::size_t class_count = 28;
    std::uint64_t seed = 0;
};

/// Uniform-confusion annotators: gold with probability p, otherwise one of
/// the other C-1 classes uniformly. Worker j casts the j-th vote at ts j+1.
std::vector<Ballot> simulate_votes(const FmssLabeling& gold, const AnnotatorModel& model, int votes_per_fmss);

struct VoteStats {
    std::size_t total = 0;
    std::size_t eligible = 0;
    std::size_t excluded = 0;
    std::optional<double> mean_votes;  // over eligible ballots
    double excluded_fraction = 0.0;
    double threshold_percentile = 1.0;  // share of ballots with scene_count <= threshold
};

VoteStats vote_stats(std::span<const Ballot> ballots, std::uint32_t max_scene_count = 11);

/// Ballots JSON: {"ballots":[{"fmss","gold","scene_count","votes":[{"class_id","worker","ts_ms"}]}]}
std::string serialize_ballots(std::span<const Ballot> ballots);
std::vector<Ballot> parse_ballots(std::string_view source);

}  // namespace ursa::annotation
