#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ursa/roadgraph.hpp"

namespace ursa::viewplan {

using roadgraph::RoadGraph;
using roadgraph::RoadType;
using roadgraph::VertexId;

/// A camera stand: the vertex to view from and the incident edge (at -> look_to)
/// to look down.
struct ViewPose {
    VertexId at = 0;
    VertexId look_to = 0;
    Vec2 look_dir;  // unit vector from `at` toward `look_to`

    bool operator==(const ViewPose&) const = default;
};

/// Builds a pose, checking that (at, look_to) is an edge of g.
ViewPose make_pose(const RoadGraph& g, VertexId at, VertexId look_to);

struct ViewPlan {
    std::vector<ViewPose> poses;
    double d_min = 0.0;
    std::string graph_ref;  // RoadGraph::fingerprint() of the source graph, may be empty
};

/// Distance-and-cone camera: a point is in view when it lies within `range`
/// of the pose vertex (inclusive) and within fov/2 of the look direction.
struct CameraModel {
    double range = 100.0;  // meters
    double fov = 90.0;     // full horizontal angle, degrees, in (0, 360]
};

bool in_view(Vec2 pose_pos, Vec2 look_dir, Vec2 point, const CameraModel& camera);

/// A point the plan should see. Targets with the same group count once, so
/// several placements of one asset share a group.
struct CoverageTarget {
    Vec2 pos;
    std::size_t group = 0;
};

struct PlanConfig {
    double d_min = 30.0;
    std::set<RoadType> allowed_road_types{RoadType::major};
    CameraModel camera;
    /// Known targets to cover. When empty, points sampled across every road
    /// corridor stand in for them.
    std::vector<CoverageTarget> targets;
};

/// Vertices a pose may be anchored at: allowed road type and not a dead end.
std::vector<VertexId> eligible_vertices(const RoadGraph& g, const PlanConfig& cfg);

struct CheckResult {
    bool pass = true;
    std::optional<std::pair<VertexId, VertexId>> violation;  // first failing pair (pose vertices)

    explicit operator bool() const { return pass; }
};

/// Pairwise view constraints on one graph. Shortest-path trees are cached,
/// so one checker is meant to serve a single planning or checking call.
class ConstraintChecker {
public:
    ConstraintChecker(const RoadGraph& g, double d_min);

    /// Strict Euclidean separation: ||pos(u) - pos(v)|| > d_min.
    bool separated(VertexId u, VertexId v) const;

    /// Along the shortest path between the two anchors (taken from the
    /// smaller id toward the larger), exactly one pose must look onto the
    /// path's first edge at its end. Pairs with no connecting path pass.
    bool look_consistent(const ViewPose& a, const ViewPose& b);

    bool compatible(const ViewPose& a, const ViewPose& b) {
        return separated(a.at, b.at) && look_consistent(a, b);
    }

    const RoadGraph& graph() const { return *graph_; }
    double d_min() const { return d_min_; }

private:
    const roadgraph::ShortestPathTree& tree(VertexId target);

    const RoadGraph* graph_;
    double d_min_;
    std::unordered_map<VertexId, roadgraph::ShortestPathTree> trees_;
};

/// Two greedy candidates, each refined by local search, the better one kept:
///  - a distance-accumulating walk over the allowed-road subgraph (pose every
///    d_min of travel, look carried along the walk) plus a fill pass;
///  - greedy set cover, repeatedly adding the feasible pose that sees the
///    most uncovered targets.
/// Refinement swaps, adds and drops poses while coverage improves or stays
/// equal with fewer poses. Every pose is checked against all others, so the
/// result always satisfies both view constraints. Never empty.
ViewPlan select_viewpoints(const RoadGraph& g, const roadgraph::VertexPartition& part,
                           const std::vector<roadgraph::InterchangeCluster>& clusters, const PlanConfig& cfg);

CheckResult check_min_separation(const ViewPlan& plan, const RoadGraph& g);
CheckResult check_look_consistency(const ViewPlan& plan, const RoadGraph& g);

struct PlanStats {
    std::size_t pose_count = 0;
    std::optional<double> mean_nn_spacing;
    std::map<RoadType, std::size_t> per_road_type;
};

PlanStats plan_stats(const ViewPlan& plan, const RoadGraph& g);

/// Plan JSON: {"d_min":float,"poses":[{"at":int,"look":[from,to]}]}
std::string serialize_plan(const ViewPlan& plan);
ViewPlan parse_plan(std::string_view source, const RoadGraph& g);

}  // namespace ursa::viewplan
