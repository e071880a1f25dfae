#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ursa/fmss.hpp"
#include "ursa/geometry.hpp"
#include "ursa/roadgraph.hpp"
#include "ursa/viewplan.hpp"

namespace ursa::world {

struct Asset {
    FmssId fmss;
    Vec2 pos;
};

/// Stand-in for a game world: labelable assets scattered around the roads.
/// The same FmssId may occur at several positions.
struct SyntheticWorld {
    std::vector<Asset> assets;
    std::string graph_ref;

    std::set<FmssId> distinct_ids() const;
};

struct VisibilityParams {
    double d_max = 100.0;  // meters, inclusive
    double fov = 90.0;     // full horizontal angle in degrees, inclusive

    void validate() const;
};

/// Half-width of the strip around each edge in which assets are placed.
inline constexpr double kCorridorHalfWidth = 15.0;

/// Scatters `density` assets per 100 m of road. Per-edge counts come from the
/// running total of road length, so the overall count is exactly
/// floor(total_length * density / 100).
SyntheticWorld generate_world(const roadgraph::RoadGraph& g, double density, std::uint64_t seed);

/// Distance-and-cone visibility: an asset counts when it lies within d_max of
/// the pose vertex and within fov/2 of the look direction.
bool asset_visible(Vec2 pose_pos, Vec2 look_dir, Vec2 asset_pos, const VisibilityParams& vp);

/// Planner targets for this world: one group per distinct FmssId.
std::vector<viewplan::CoverageTarget> coverage_targets(const SyntheticWorld& world);

std::set<FmssId> visible_fmss(const viewplan::ViewPose& pose, const roadgraph::RoadGraph& g,
                              const SyntheticWorld& world, const VisibilityParams& vp);

struct CoverageReport {
    double fraction = 1.0;
    std::size_t covered = 0;
    std::size_t total = 0;
    std::set<FmssId> uncovered;
};

CoverageReport coverage_of_plan(const viewplan::ViewPlan& plan, const roadgraph::RoadGraph& g,
                                const SyntheticWorld& world, const VisibilityParams& vp);

inline constexpr std::size_t kBruteForceVertexLimit = 12;

/// Exhaustive search over feasible pose sets of at most max_poses poses;
/// returns the plan with the largest coverage, then fewest poses, then the
/// lexicographically smallest (at, look_to) sequence. Test oracle only.
viewplan::ViewPlan brute_force_best_plan(const roadgraph::RoadGraph& g, const SyntheticWorld& world,
                                         const viewplan::PlanConfig& cfg, const VisibilityParams& vp,
                                         std::size_t max_poses);

/// World JSON: {"assets":[{"file","model","shader","sampler","x","y"}]}
std::string serialize_world(const SyntheticWorld& world);
SyntheticWorld parse_world(std::string_view source);

}  // namespace ursa::world
