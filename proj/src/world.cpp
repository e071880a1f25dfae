#include "ursa/world.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>

#include "json.hpp"
#include "ursa/error.hpp"
#include "ursa/random.hpp"

namespace ursa::world {

using nlohmann::json;
using roadgraph::RoadGraph;
using roadgraph::VertexId;
using viewplan::ViewPlan;
using viewplan::ViewPose;

std::set<FmssId> SyntheticWorld::distinct_ids() const {
    std::set<FmssId> ids;
    for (const auto& a : assets) ids.insert(a.fmss);
    return ids;
}

void VisibilityParams::validate() const {
    if (!(d_max > 0.0)) throw Error(ErrorCode::invalid_argument, "d_max must be positive");
    if (!(fov > 0.0 && fov <= 360.0)) throw Error(ErrorCode::invalid_argument, "fov must be in (0, 360]");
}

SyntheticWorld generate_world(const RoadGraph& g, double density, std::uint64_t seed) {
    if (!(density > 0.0) || !std::isfinite(density)) {
        throw Error(ErrorCode::invalid_argument, "asset density must be positive");
    }
    Rng rng(seed);
    SyntheticWorld world;
    world.graph_ref = g.fingerprint();

    std::vector<FmssId> pool;
    double walked = 0.0;
    std::size_t emitted = 0;
    for (const auto& e : g.edges()) {
        const Vec2 a = g.position(e.a);
        const Vec2 b = g.position(e.b);
        const double len = distance(a, b);
        walked += len;
        const auto due = static_cast<std::size_t>(std::floor(walked * density / 100.0 + 1e-9));
        const Vec2 along = b - a;
        const Vec2 normal = len > 0.0 ? Vec2{-along.y / len, along.x / len} : Vec2{0.0, 1.0};
        const auto type = roadgraph::road_type_name(g.vertex(e.a).road_type);
        for (; emitted < due; ++emitted) {
            const double t = rng.uniform();
            const double lateral = rng.uniform(-kCorridorHalfWidth, kCorridorHalfWidth);
            Asset asset;
            asset.pos = a + along * t + normal * lateral;
            if (!pool.empty() && rng.uniform() < 0.25) {
                asset.fmss = pool[rng.below(pool.size())];
            } else {
                const auto n = std::to_string(pool.size());
                asset.fmss = {"props/" + std::string(type) + "/p" + n + ".ydr", "m" + n,
                              static_cast<std::int32_t>(rng.below(4)), static_cast<std::int32_t>(rng.below(3))};
                pool.push_back(asset.fmss);
            }
            world.assets.push_back(std::move(asset));
        }
    }
    return world;
}

bool asset_visible(Vec2 pose_pos, Vec2 look_dir, Vec2 asset_pos, const VisibilityParams& vp) {
    return viewplan::in_view(pose_pos, look_dir, asset_pos, {vp.d_max, vp.fov});
}

std::vector<viewplan::CoverageTarget> coverage_targets(const SyntheticWorld& world) {
    std::map<FmssId, std::size_t> group;
    std::vector<viewplan::CoverageTarget> out;
    out.reserve(world.assets.size());
    for (const auto& a : world.assets) {
        const auto it = group.emplace(a.fmss, group.size()).first;
        out.push_back({a.pos, it->second});
    }
    return out;
}

std::set<FmssId> visible_fmss(const ViewPose& pose, const RoadGraph& g, const SyntheticWorld& world,
                              const VisibilityParams& vp) {
    vp.validate();
    const Vec2 at = g.position(pose.at);
    std::set<FmssId> out;
    for (const auto& a : world.assets) {
        if (asset_visible(at, pose.look_dir, a.pos, vp)) out.insert(a.fmss);
    }
    return out;
}

CoverageReport coverage_of_plan(const ViewPlan& plan, const RoadGraph& g, const SyntheticWorld& world,
                                const VisibilityParams& vp) {
    vp.validate();
    CoverageReport report;
    const auto all = world.distinct_ids();
    report.total = all.size();
    std::set<FmssId> seen;
    for (const auto& pose : plan.poses) {
        auto vis = visible_fmss(pose, g, world, vp);
        seen.insert(vis.begin(), vis.end());
    }
    report.covered = seen.size();
    std::set_difference(all.begin(), all.end(), seen.begin(), seen.end(),
                        std::inserter(report.uncovered, report.uncovered.end()));
    report.fraction = report.total == 0 ? 1.0 : static_cast<double>(report.covered) / static_cast<double>(report.total);
    return report;
}

namespace {

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& b) {
    std::size_t n = 0;
    for (auto w : b) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

Bits bit_or(const Bits& a, const Bits& b) {
    Bits out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] | b[i];
    return out;
}

struct Option {
    ViewPose pose;
    Bits seen;
};

class ExhaustiveSearch {
public:
    ExhaustiveSearch(const RoadGraph& g, std::vector<std::vector<Option>> options, double d_min,
                     std::size_t max_poses, std::size_t words)
        : options_(std::move(options)), checker_(g, d_min), max_poses_(max_poses) {
        suffix_.assign(options_.size() + 1, Bits(words, 0));
        for (std::size_t i = options_.size(); i-- > 0;) {
            suffix_[i] = suffix_[i + 1];
            for (const auto& o : options_[i]) suffix_[i] = bit_or(suffix_[i], o.seen);
        }
        best_count_ = 0;
        chosen_.reserve(max_poses);
        consider(Bits(words, 0));
        search(0, Bits(words, 0));
    }

    std::vector<ViewPose> best() const { return best_; }

private:
    static bool lex_less(const std::vector<ViewPose>& l, const std::vector<ViewPose>& r) {
        return std::lexicographical_compare(l.begin(), l.end(), r.begin(), r.end(), [](const auto& a, const auto& b) {
            return std::pair{a.at, a.look_to} < std::pair{b.at, b.look_to};
        });
    }

    void consider(const Bits& covered) {
        const std::size_t count = popcount(covered);
        const bool better = !have_best_ || count > best_count_ ||
                            (count == best_count_ &&
                             (chosen_.size() < best_.size() || (chosen_.size() == best_.size() && lex_less(chosen_, best_))));
        if (better) {
            have_best_ = true;
            best_count_ = count;
            best_ = chosen_;
        }
    }

    void search(std::size_t i, const Bits& covered) {
        if (i == options_.size() || chosen_.size() == max_poses_) return;
        if (popcount(bit_or(covered, suffix_[i])) < best_count_) return;
        for (const auto& opt : options_[i]) {
            const bool ok = std::all_of(chosen_.begin(), chosen_.end(),
                                        [&](const ViewPose& p) { return checker_.compatible(opt.pose, p); });
            if (!ok) continue;
            chosen_.push_back(opt.pose);
            const Bits next = bit_or(covered, opt.seen);
            consider(next);
            search(i + 1, next);
            chosen_.pop_back();
        }
        search(i + 1, covered);
    }

    std::vector<std::vector<Option>> options_;
    viewplan::ConstraintChecker checker_;
    std::size_t max_poses_;
    std::vector<Bits> suffix_;
    std::vector<ViewPose> chosen_;
    std::vector<ViewPose> best_;
    std::size_t best_count_ = 0;
    bool have_best_ = false;
};

}  // namespace

ViewPlan brute_force_best_plan(const RoadGraph& g, const SyntheticWorld& world, const viewplan::PlanConfig& cfg,
                               const VisibilityParams& vp, std::size_t max_poses) {
    vp.validate();
    if (!(cfg.d_min > 0.0)) throw Error(ErrorCode::invalid_argument, "d_min must be positive");
    const auto eligible = viewplan::eligible_vertices(g, cfg);
    if (eligible.size() > kBruteForceVertexLimit) {
        throw Error(ErrorCode::guard_exceeded, std::to_string(eligible.size()) +
                                                   " eligible vertices exceed the exhaustive-search limit of " +
                                                   std::to_string(kBruteForceVertexLimit));
    }

    std::map<FmssId, std::size_t> index;
    for (const auto& id : world.distinct_ids()) index.emplace(id, index.size());
    const std::size_t words = (index.size() + 63) / 64 + 1;

    std::vector<std::vector<Option>> options;
    for (VertexId v : eligible) {
        std::vector<Option> at_v;
        for (VertexId to : g.neighbors(v)) {
            Option o{viewplan::make_pose(g, v, to), Bits(words, 0)};
            const Vec2 here = g.position(v);
            for (const auto& a : world.assets) {
                if (asset_visible(here, o.pose.look_dir, a.pos, vp)) {
                    const auto k = index.at(a.fmss);
                    o.seen[k / 64] |= std::uint64_t{1} << (k % 64);
                }
            }
            at_v.push_back(std::move(o));
        }
        options.push_back(std::move(at_v));
    }

    ExhaustiveSearch search(g, std::move(options), cfg.d_min, max_poses, words);
    ViewPlan plan;
    plan.poses = search.best();
    plan.d_min = cfg.d_min;
    plan.graph_ref = g.fingerprint();
    return plan;
}

std::string serialize_world(const SyntheticWorld& world) {
    json doc;
    doc["assets"] = json::array();
    for (const auto& a : world.assets) {
        doc["assets"].push_back({{"file", a.fmss.file},
                                 {"model", a.fmss.model},
                                 {"shader", a.fmss.shader},
                                 {"sampler", a.fmss.sampler},
                                 {"x", a.pos.x},
                                 {"y", a.pos.y}});
    }
    if (!world.graph_ref.empty()) doc["graph_ref"] = world.graph_ref;
    return doc.dump(2) + "\n";
}

SyntheticWorld parse_world(std::string_view source) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse_error, e.what(), "byte " + std::to_string(e.byte));
    }
    SyntheticWorld world;
    if (!doc.is_object() || !doc.contains("assets") || !doc["assets"].is_array()) {
        throw Error(ErrorCode::parse_error, "missing 'assets' array", "$.assets");
    }
    const auto& assets = doc["assets"];
    for (std::size_t i = 0; i < assets.size(); ++i) {
        const auto& a = assets[i];
        try {
            Asset asset;
            asset.fmss = {a.at("file").get<std::string>(), a.at("model").get<std::string>(),
                          a.at("shader").get<std::int32_t>(), a.at("sampler").get<std::int32_t>()};
            asset.pos = {a.at("x").get<double>(), a.at("y").get<double>()};
            if (!asset.pos.finite()) throw Error(ErrorCode::invalid_argument, "asset position must be finite");
            world.assets.push_back(std::move(asset));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse_error, e.what(), "$.assets[" + std::to_string(i) + "]");
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), "$.assets[" + std::to_string(i) + "]");
        }
    }
    if (doc.contains("graph_ref")) world.graph_ref = doc["graph_ref"].get<std::string>();
    return world;
}

}  // namespace ursa::world
