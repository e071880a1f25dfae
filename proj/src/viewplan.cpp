#include "ursa/viewplan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include "json.hpp"
#include "ursa/error.hpp"

namespace ursa::viewplan {

using nlohmann::json;
using roadgraph::InterchangeCluster;
using roadgraph::ShortestPathTree;
using roadgraph::VertexPartition;

ViewPose make_pose(const RoadGraph& g, VertexId at, VertexId look_to) {
    if (!g.contains(at)) {
        throw Error(ErrorCode::plan_mismatch, "pose vertex " + std::to_string(at) + " not in graph");
    }
    if (!g.has_edge(at, look_to)) {
        throw Error(ErrorCode::plan_mismatch, "look edge " + std::to_string(at) + "->" +
                                                  std::to_string(look_to) + " is not an edge at the pose");
    }
    const Vec2 d = g.position(look_to) - g.position(at);
    ViewPose pose{at, look_to, {1.0, 0.0}};
    if (d.norm() > 0.0) pose.look_dir = normalized(d);
    return pose;
}

bool in_view(Vec2 pose_pos, Vec2 look_dir, Vec2 point, const CameraModel& camera) {
    const Vec2 d = point - pose_pos;
    const double dist = d.norm();
    if (dist > camera.range) return false;
    if (dist == 0.0 || camera.fov >= 360.0) return true;
    const double half = camera.fov * 0.5 * std::numbers::pi / 180.0;
    return dot(d, look_dir) / dist >= std::cos(half) - 1e-12;
}

std::vector<VertexId> eligible_vertices(const RoadGraph& g, const PlanConfig& cfg) {
    std::vector<VertexId> out;
    for (const auto& v : g.vertices()) {
        if (cfg.allowed_road_types.contains(v.road_type) && g.degree(v.id) >= 2) out.push_back(v.id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

ConstraintChecker::ConstraintChecker(const RoadGraph& g, double d_min) : graph_(&g), d_min_(d_min) {}

bool ConstraintChecker::separated(VertexId u, VertexId v) const {
    return distance(graph_->position(u), graph_->position(v)) > d_min_;
}

const ShortestPathTree& ConstraintChecker::tree(VertexId target) {
    auto it = trees_.find(target);
    if (it == trees_.end()) it = trees_.emplace(target, ShortestPathTree(*graph_, target)).first;
    return it->second;
}

bool ConstraintChecker::look_consistent(const ViewPose& a, const ViewPose& b) {
    const ViewPose& u = a.at < b.at ? a : b;
    const ViewPose& v = a.at < b.at ? b : a;
    if (u.at == v.at) return false;
    const auto& t = tree(v.at);
    if (!t.reachable(u.at)) return true;
    const auto path = t.path_from(u.at);
    const VertexId u1 = path[1];
    const VertexId v1 = path[path.size() - 2];
    const bool u_in = u.look_to == u1;
    const bool v_in = v.look_to == v1;
    return u_in != v_in;
}

namespace {

void validate_plan(const ViewPlan& plan, const RoadGraph& g) {
    if (!plan.graph_ref.empty() && plan.graph_ref != g.fingerprint()) {
        throw Error(ErrorCode::plan_mismatch, "plan was built for graph " + plan.graph_ref + ", not " +
                                                  g.fingerprint());
    }
    for (const auto& pose : plan.poses) make_pose(g, pose.at, pose.look_to);
}

// Candidate look targets at `at`, best aligned with `forward` first.
std::vector<VertexId> ranked_look_targets(const RoadGraph& g, VertexId at, std::optional<Vec2> forward) {
    std::vector<std::pair<double, VertexId>> ranked;
    const Vec2 here = g.position(at);
    for (VertexId nb : g.neighbors(at)) {
        double score = 0.0;
        if (forward) {
            const Vec2 d = g.position(nb) - here;
            score = d.norm() > 0.0 ? dot(normalized(d), *forward) : -2.0;
        }
        ranked.emplace_back(-score, nb);
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<VertexId> out;
    out.reserve(ranked.size());
    for (const auto& r : ranked) out.push_back(r.second);
    return out;
}

// Stand-in targets when none are given: a lattice over each road corridor,
// one point every 5 m along the edge at four lateral offsets.
std::vector<CoverageTarget> road_samples(const RoadGraph& g) {
    static constexpr double kStep = 5.0;
    static constexpr double kOffsets[] = {-11.25, -3.75, 3.75, 11.25};
    std::vector<CoverageTarget> out;
    for (const auto& e : g.edges()) {
        const Vec2 a = g.position(e.a);
        const Vec2 b = g.position(e.b);
        const double len = distance(a, b);
        const Vec2 normal = len > 0.0 ? Vec2{(a - b).y / len, (b - a).x / len} : Vec2{0.0, 1.0};
        const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / kStep)));
        for (std::size_t i = 0; i < steps; ++i) {
            const Vec2 p = a + (b - a) * ((static_cast<double>(i) + 0.5) / static_cast<double>(steps));
            for (double off : kOffsets) out.push_back({p + normal * off, out.size()});
        }
    }
    return out;
}

using Bits = std::vector<std::uint64_t>;

std::size_t popcount(const Bits& b) {
    std::size_t n = 0;
    for (auto w : b) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

// Pose options with the target groups each one sees, plus the local moves
// used to refine a plan. Plans are lists of option indices; scores are
// numbers of covered groups. Pairwise compatibility is memoized.
class CoverageSearch {
public:
    CoverageSearch(const RoadGraph& g, const PlanConfig& cfg, const std::set<VertexId>& eligible,
                   ConstraintChecker& checker)
        : checker_(checker) {
        auto targets = cfg.targets.empty() ? road_samples(g) : cfg.targets;
        // Number groups in spatial order (100 m cells) so that everything one
        // pose sees falls into a short run of bitset words.
        std::vector<std::size_t> order(targets.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        auto cell = [](const CoverageTarget& t) {
            return std::tuple{std::floor(t.pos.y / 100.0), std::floor(t.pos.x / 100.0), t.pos.x, t.pos.y};
        };
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return cell(targets[l]) < cell(targets[r]); });
        std::map<std::size_t, std::size_t> renumber;
        for (std::size_t i : order) renumber.emplace(targets[i].group, renumber.size());
        for (auto& t : targets) t.group = renumber.at(t.group);
        words_ = (renumber.size() + 63) / 64;

        for (VertexId v : eligible) {
            const Vec2 here = g.position(v);
            for (VertexId to : g.neighbors(v)) {
                Option o{make_pose(g, v, to), Bits(words_, 0), 0, 0};
                for (const auto& t : targets) {
                    if (in_view(here, o.pose.look_dir, t.pos, cfg.camera)) {
                        o.seen[t.group / 64] |= std::uint64_t{1} << (t.group % 64);
                    }
                }
                while (o.hi < words_ && o.seen[words_ - 1 - o.hi] == 0) ++o.hi;
                o.hi = words_ - o.hi;
                while (o.lo < o.hi && o.seen[o.lo] == 0) ++o.lo;
                index_[{v, to}] = options_.size();
                options_.push_back(std::move(o));
            }
        }
        compat_.assign(options_.size() * options_.size(), -1);
    }

    using Plan = std::vector<std::size_t>;

    Plan from_poses(const std::vector<ViewPose>& poses) const {
        Plan out;
        for (const auto& p : poses) out.push_back(index_.at({p.at, p.look_to}));
        return out;
    }

    std::vector<ViewPose> to_poses(const Plan& plan) const {
        std::vector<ViewPose> out;
        for (std::size_t k : plan) out.push_back(options_[k].pose);
        return out;
    }

    std::size_t score(const Plan& plan) const { return popcount(cover(plan, plan.size())); }

    /// The plan with every feasible option that still adds coverage.
    Plan filled(Plan plan) {
        fill(plan);
        drop_redundant(plan);
        return plan;
    }

    /// Higher coverage wins; equal coverage goes to the smaller plan.
    bool better(const Plan& a, const Plan& b) const {
        if (a.empty() || b.empty()) return !a.empty();
        const std::size_t sa = score(a), sb = score(b);
        return sa > sb || (sa == sb && a.size() < b.size());
    }

    /// Greedy set cover from several seeds: the options that see the most on
    /// their own, as many as a fixed work budget allows. Each run is refined
    /// and the best result kept (ties: fewer poses, then earlier seed).
    Plan greedy() {
        std::vector<std::size_t> seeds(options_.size());
        for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = k;
        std::stable_sort(seeds.begin(), seeds.end(), [&](std::size_t l, std::size_t r) {
            return popcount(options_[l].seen) > popcount(options_[r].seen);
        });
        const std::size_t starts =
            std::clamp<std::size_t>(kStartBudget / std::max<std::size_t>(1, options_.size()), 1, seeds.size());
        Plan best;
        std::size_t best_score = 0;
        for (std::size_t s = 0; s < starts; ++s) {
            Plan plan{seeds[s]};
            fill(plan);
            plan = refine(std::move(plan));
            const std::size_t sc = score(plan);
            if (best.empty() || sc > best_score || (sc == best_score && plan.size() < best.size())) {
                best = std::move(plan);
                best_score = sc;
            }
        }
        return best;
    }

    /// Local search: single-pose swaps and additions, then "kicks" that drop
    /// one pose and greedily refill; stops when nothing improves coverage.
    Plan refine(Plan plan) {
        for (int round = 0; round < kMaxRounds; ++round) {
            bool changed = false;
            for (std::size_t i = 0; i < plan.size(); ++i) changed |= swap_best(plan, i);
            changed |= fill(plan);
            if (!changed) changed = kick(plan);
            if (!changed) break;
        }
        drop_redundant(plan);
        return plan;
    }

private:
    struct Option {
        ViewPose pose;
        Bits seen;
        std::size_t lo, hi;  // words outside [lo, hi) are zero
    };

    static constexpr std::size_t kStartBudget = 2000;
    static constexpr int kMaxRounds = 16;

    bool compatible(std::size_t a, std::size_t b) {
        auto& memo = compat_[a * options_.size() + b];
        if (memo < 0) {
            memo = checker_.compatible(options_[a].pose, options_[b].pose) ? 1 : 0;
            compat_[b * options_.size() + a] = memo;
        }
        return memo == 1;
    }

    // Union of everything but plan[skip].
    Bits cover(const Plan& plan, std::size_t skip) const {
        Bits out(words_, 0);
        for (std::size_t i = 0; i < plan.size(); ++i) {
            if (i == skip) continue;
            const Option& o = options_[plan[i]];
            for (std::size_t w = o.lo; w < o.hi; ++w) out[w] |= o.seen[w];
        }
        return out;
    }

    std::size_t gain(const Bits& base, std::size_t k) const {
        const Option& o = options_[k];
        std::size_t n = 0;
        for (std::size_t w = o.lo; w < o.hi; ++w) n += static_cast<std::size_t>(std::popcount(o.seen[w] & ~base[w]));
        return n;
    }

    bool fits(std::size_t candidate, const Plan& plan, std::size_t skip) {
        for (std::size_t i = 0; i < plan.size(); ++i) {
            if (i != skip && !compatible(candidate, plan[i])) return false;
        }
        return true;
    }

    // Picks the feasible option with the largest value above `floor`, first
    // in option order on ties; value(k) must be cheap.
    template <typename Value>
    std::optional<std::size_t> best_feasible(const Plan& plan, std::size_t skip, std::size_t floor, Value value) {
        std::vector<std::pair<std::size_t, std::size_t>> ranked;  // (value, option)
        for (std::size_t k = 0; k < options_.size(); ++k) {
            const std::size_t v = value(k);
            if (v > floor) ranked.emplace_back(v, k);
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
        for (const auto& [v, k] : ranked) {
            if (fits(k, plan, skip)) return k;
        }
        return std::nullopt;
    }

    // Repeatedly adds the feasible option with the largest positive gain
    // (first in option order on ties). Gains only shrink and infeasible
    // options stay infeasible as the plan grows, so stale gains serve as
    // upper bounds and are refreshed lazily.
    bool fill(Plan& plan) {
        Bits base = cover(plan, plan.size());
        auto before = [](const std::pair<std::size_t, std::size_t>& l, const std::pair<std::size_t, std::size_t>& r) {
            return l.first < r.first || (l.first == r.first && l.second > r.second);
        };
        std::vector<std::pair<std::size_t, std::size_t>> heap;  // (gain bound, option)
        for (std::size_t k = 0; k < options_.size(); ++k) {
            const std::size_t g = gain(base, k);
            if (g > 0) heap.emplace_back(g, k);
        }
        std::make_heap(heap.begin(), heap.end(), before);
        bool added = false;
        while (!heap.empty()) {
            std::pop_heap(heap.begin(), heap.end(), before);
            const std::size_t k = heap.back().second;
            heap.pop_back();
            if (!fits(k, plan, plan.size())) continue;
            const std::size_t g = gain(base, k);
            if (g == 0) continue;
            if (!heap.empty() && before(std::pair{g, k}, heap.front())) {
                heap.emplace_back(g, k);
                std::push_heap(heap.begin(), heap.end(), before);
                continue;
            }
            plan.push_back(k);
            for (std::size_t w = options_[k].lo; w < options_[k].hi; ++w) base[w] |= options_[k].seen[w];
            added = true;
        }
        return added;
    }

    // Replaces plan[i] by the feasible option that most increases coverage.
    bool swap_best(Plan& plan, std::size_t i) {
        const Bits others = cover(plan, i);
        const std::size_t current = gain(others, plan[i]);
        const auto k = best_feasible(plan, i, current, [&](std::size_t k) { return gain(others, k); });
        if (k) plan[i] = *k;
        return k.has_value();
    }

    bool kick(Plan& plan) {
        const std::size_t current = score(plan);
        for (std::size_t i = 0; i < plan.size(); ++i) {
            Plan trial = plan;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
            fill(trial);
            if (score(trial) > current) {
                plan = std::move(trial);
                return true;
            }
        }
        return false;
    }

    // Drops options that add nothing the rest do not already see, latest
    // first, always keeping at least one.
    void drop_redundant(Plan& plan) const {
        for (std::size_t i = plan.size(); i-- > 0 && plan.size() > 1;) {
            if (gain(cover(plan, i), plan[i]) == 0) plan.erase(plan.begin() + static_cast<std::ptrdiff_t>(i));
        }
    }

    ConstraintChecker& checker_;
    std::size_t words_ = 0;
    std::vector<Option> options_;
    std::map<std::pair<VertexId, VertexId>, std::size_t> index_;
    std::vector<std::int8_t> compat_;
};

class Planner {
public:
    Planner(const RoadGraph& g, const std::vector<InterchangeCluster>& clusters, const PlanConfig& cfg)
        : g_(g), cfg_(cfg), checker_(g, cfg.d_min) {
        for (const auto& c : clusters) {
            for (VertexId id : c.member_ids) cluster_dir_[id] = c.direction;
        }
        for (VertexId id : eligible_vertices(g, cfg)) eligible_.insert(id);
    }

    ViewPlan run() {
        if (eligible_.empty()) {
            throw Error(ErrorCode::no_eligible_vertices, "no vertex of an allowed road type can anchor a view");
        }
        ViewPlan plan;
        plan.d_min = cfg_.d_min;
        plan.graph_ref = g_.fingerprint();
        CoverageSearch search(g_, cfg_, eligible_, checker_);
        // Walks at a fixed ladder of spacings no shorter than d_min. The
        // ladder does not depend on d_min, so a larger d_min only removes
        // candidates; the best few are refined.
        std::vector<CoverageSearch::Plan> walks;
        for (double spacing : walk_spacings()) walks.push_back(search.filled(search.from_poses(walk(spacing))));
        std::vector<std::size_t> rank(walks.size());
        for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
        std::stable_sort(rank.begin(), rank.end(),
                         [&](std::size_t l, std::size_t r) { return search.better(walks[l], walks[r]); });
        CoverageSearch::Plan best;
        for (std::size_t i = 0; i < std::min(rank.size(), kRefined); ++i) {
            auto refined = search.refine(walks[rank[i]]);
            if (search.better(refined, best)) best = std::move(refined);
        }
        auto covered = search.greedy();
        if (search.better(covered, best)) best = std::move(covered);

        plan.poses = search.to_poses(best);
        return plan;
    }

private:
    static constexpr std::size_t kRefined = 2;
    static constexpr double kLadderBase = 5.0;
    static constexpr double kLadderStep = 1.25;

    std::vector<double> walk_spacings() const {
        std::vector<double> out{cfg_.d_min};
        const double top = std::max(cfg_.d_min, cfg_.camera.range);
        for (double s = kLadderBase; s <= top; s *= kLadderStep) {
            if (s > cfg_.d_min) out.push_back(s);
        }
        return out;
    }

    // One deterministic walk over every component, emitting a pose once the
    // distance walked since the last one exceeds `spacing`. The tightest walk
    // also gets a fill pass; wider ones are completed by the coverage search.
    std::vector<ViewPose> walk(double spacing) {
        poses_.clear();
        order_.clear();
        incoming_.clear();
        spacing_ = spacing;
        std::set<VertexId> visited;
        for (VertexId seed : eligible_) {
            if (visited.contains(seed)) continue;
            walk_component(component_start(seed), visited);
        }
        if (spacing <= cfg_.d_min) fill();
        return poses_;
    }

    std::vector<VertexId> walk_neighbors(VertexId v) const {
        std::vector<VertexId> out;
        for (VertexId nb : g_.neighbors(v)) {
            if (eligible_.contains(nb)) out.push_back(nb);
        }
        return out;
    }

    // The walk starts from an end of the component when it has one.
    VertexId component_start(VertexId seed) const {
        std::set<VertexId> seen{seed};
        std::vector<VertexId> stack{seed};
        VertexId best = seed;
        std::size_t best_deg = walk_neighbors(seed).size();
        while (!stack.empty()) {
            VertexId x = stack.back();
            stack.pop_back();
            const auto nbs = walk_neighbors(x);
            if (nbs.size() < best_deg || (nbs.size() == best_deg && x < best)) {
                best = x;
                best_deg = nbs.size();
            }
            for (VertexId nb : nbs) {
                if (seen.insert(nb).second) stack.push_back(nb);
            }
        }
        return best;
    }

    std::optional<Vec2> forward_at(VertexId x, std::optional<Vec2> incoming) const {
        auto it = cluster_dir_.find(x);
        if (it != cluster_dir_.end()) {
            Vec2 dir = it->second;
            if (incoming && dot(dir, *incoming) < 0.0) dir = -dir;
            return dir;
        }
        return incoming;
    }

    bool try_emit(VertexId x, std::optional<Vec2> forward) {
        for (VertexId to : ranked_look_targets(g_, x, forward)) {
            const ViewPose candidate = make_pose(g_, x, to);
            const bool ok = std::all_of(poses_.begin(), poses_.end(),
                                        [&](const ViewPose& p) { return checker_.compatible(candidate, p); });
            if (ok) {
                poses_.push_back(candidate);
                return true;
            }
        }
        return false;
    }

    struct Frame {
        VertexId vertex;
        std::optional<Vec2> incoming;
        double since_pose;
        bool first;
    };

    void walk_component(VertexId start, std::set<VertexId>& visited) {
        std::vector<Frame> stack{{start, std::nullopt, 0.0, true}};
        while (!stack.empty()) {
            Frame f = stack.back();
            stack.pop_back();
            if (!visited.insert(f.vertex).second) continue;
            order_.push_back(f.vertex);

            const Vec2 here = g_.position(f.vertex);
            std::vector<VertexId> next;
            for (VertexId nb : walk_neighbors(f.vertex)) {
                if (!visited.contains(nb)) next.push_back(nb);
            }
            // Straightest continuation is walked first; ties by id.
            auto heading = [&](VertexId nb) {
                const Vec2 d = g_.position(nb) - here;
                return d.norm() > 0.0 ? normalized(d) : Vec2{1.0, 0.0};
            };
            if (f.incoming) {
                std::stable_sort(next.begin(), next.end(), [&](VertexId l, VertexId r) {
                    return dot(heading(l), *f.incoming) > dot(heading(r), *f.incoming);
                });
            }

            std::optional<Vec2> incoming = f.incoming;
            if (!incoming && !next.empty()) incoming = heading(next.front());
            incoming_[f.vertex] = incoming;

            double since = f.since_pose;
            if (f.first || since > spacing_) {
                if (try_emit(f.vertex, forward_at(f.vertex, incoming))) since = 0.0;
            }

            // Reverse push so the preferred child is popped first.
            for (auto it = next.rbegin(); it != next.rend(); ++it) {
                stack.push_back({*it, heading(*it), since + g_.edge_length(f.vertex, *it), false});
            }
        }
    }

    // Anchor extra poses wherever the constraints still allow one.
    void fill() {
        std::set<VertexId> used;
        for (const auto& p : poses_) used.insert(p.at);
        for (VertexId x : order_) {
            if (used.contains(x)) continue;
            if (try_emit(x, forward_at(x, incoming_[x]))) used.insert(x);
        }
    }

    const RoadGraph& g_;
    const PlanConfig& cfg_;
    ConstraintChecker checker_;
    std::map<VertexId, Vec2> cluster_dir_;
    std::set<VertexId> eligible_;
    std::vector<ViewPose> poses_;
    std::vector<VertexId> order_;
    std::map<VertexId, std::optional<Vec2>> incoming_;
    double spacing_ = 0.0;
};

}  // namespace

ViewPlan select_viewpoints(const RoadGraph& g, const VertexPartition& /*part*/,
                           const std::vector<InterchangeCluster>& clusters, const PlanConfig& cfg) {
    if (!(cfg.d_min > 0.0)) throw Error(ErrorCode::invalid_argument, "d_min must be positive");
    if (!(cfg.camera.range > 0.0)) throw Error(ErrorCode::invalid_argument, "camera range must be positive");
    if (!(cfg.camera.fov > 0.0 && cfg.camera.fov <= 360.0)) {
        throw Error(ErrorCode::invalid_argument, "camera fov must be in (0, 360]");
    }
    return Planner(g, clusters, cfg).run();
}

CheckResult check_min_separation(const ViewPlan& plan, const RoadGraph& g) {
    validate_plan(plan, g);
    ConstraintChecker checker(g, plan.d_min);
    for (std::size_t i = 0; i < plan.poses.size(); ++i) {
        for (std::size_t j = i + 1; j < plan.poses.size(); ++j) {
            if (!checker.separated(plan.poses[i].at, plan.poses[j].at)) {
                return {false, std::pair{plan.poses[i].at, plan.poses[j].at}};
            }
        }
    }
    return {};
}

CheckResult check_look_consistency(const ViewPlan& plan, const RoadGraph& g) {
    validate_plan(plan, g);
    ConstraintChecker checker(g, plan.d_min);
    for (std::size_t i = 0; i < plan.poses.size(); ++i) {
        for (std::size_t j = i + 1; j < plan.poses.size(); ++j) {
            if (!checker.look_consistent(plan.poses[i], plan.poses[j])) {
                return {false, std::pair{plan.poses[i].at, plan.poses[j].at}};
            }
        }
    }
    return {};
}

PlanStats plan_stats(const ViewPlan& plan, const RoadGraph& g) {
    validate_plan(plan, g);
    PlanStats stats;
    stats.pose_count = plan.poses.size();
    for (const auto& p : plan.poses) ++stats.per_road_type[g.vertex(p.at).road_type];
    if (plan.poses.size() >= 2) {
        double total = 0.0;
        for (std::size_t i = 0; i < plan.poses.size(); ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < plan.poses.size(); ++j) {
                if (i != j) nearest = std::min(nearest, distance(g.position(plan.poses[i].at), g.position(plan.poses[j].at)));
            }
            total += nearest;
        }
        stats.mean_nn_spacing = total / static_cast<double>(plan.poses.size());
    }
    return stats;
}

std::string serialize_plan(const ViewPlan& plan) {
    json doc;
    doc["d_min"] = plan.d_min;
    if (!plan.graph_ref.empty()) doc["graph_ref"] = plan.graph_ref;
    doc["poses"] = json::array();
    for (const auto& p : plan.poses) doc["poses"].push_back({{"at", p.at}, {"look", {p.at, p.look_to}}});
    return doc.dump(2) + "\n";
}

ViewPlan parse_plan(std::string_view source, const RoadGraph& g) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse_error, e.what(), "byte " + std::to_string(e.byte));
    }
    ViewPlan plan;
    try {
        plan.d_min = doc.at("d_min").get<double>();
        if (doc.contains("graph_ref")) plan.graph_ref = doc["graph_ref"].get<std::string>();
        const auto& poses = doc.at("poses");
        for (std::size_t i = 0; i < poses.size(); ++i) {
            const auto& p = poses[i];
            const auto at = p.at("at").get<VertexId>();
            const auto look = p.at("look");
            if (!look.is_array() || look.size() != 2 || look[0].get<VertexId>() != at) {
                throw Error(ErrorCode::parse_error, "look must be [at, to]", "$.poses[" + std::to_string(i) + "]");
            }
            plan.poses.push_back(make_pose(g, at, look[1].get<VertexId>()));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what());
    }
    if (!plan.graph_ref.empty() && plan.graph_ref != g.fingerprint()) {
        throw Error(ErrorCode::plan_mismatch, "plan was built for a different graph");
    }
    return plan;
}

}  // namespace ursa::viewplan
