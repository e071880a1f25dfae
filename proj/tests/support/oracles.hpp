#pragma once

#include <optional>
#include <set>
#include <span>
#include <vector>

#include "ursa/compositor.hpp"
#include "ursa/roadgraph.hpp"
#include "ursa/viewplan.hpp"
#include "ursa/world.hpp"

// Reference implementations used to check the library. Each is written
// from the definition, as directly as possible, and shares no code with src/.
namespace ursa::oracle {

using roadgraph::VertexId;

/// O(n^2) DBSCAN: neighbourhoods by full scan, clusters grown breadth-first
/// from core points, border points attached to their nearest core point
/// (smaller id on equal distance). Clusters as sorted id sets.
std::set<std::set<VertexId>> dbscan(std::span<const roadgraph::LabeledPoint> points, double eps, std::size_t min_pts);

/// Per-pixel argmax over all layers with the (weight desc, FmssId asc) order.
compositor::LabelMap argmax_labels(const compositor::ContributionStack& stack, const compositor::FmssLabeling& labels);

/// Length of the shortest simple path between u and v by enumerating every
/// simple path (small graphs only); nullopt when disconnected.
std::optional<double> shortest_length_by_enumeration(const roadgraph::RoadGraph& g, VertexId u, VertexId v);

/// Principal axis via Eigen's self-adjoint eigensolver on the covariance matrix.
Vec2 principal_axis(std::span<const Vec2> points);

/// Minimax formula for the least-squares isotonic fit:
/// f(i) = max_{j<=i} min_{k>=i} mean(y[j..k]).
std::vector<double> isotonic_minimax(std::span<const double> y);

/// Exact probability that plurality over k iid votes picks the gold class,
/// each vote gold with probability p and otherwise uniform over the C-1
/// other classes; t-way ties at the top are resolved uniformly.
double plurality_accuracy_exact(double p, int classes, int k);

/// Minimum separation by direct pairwise distance check.
bool separated_by_definition(const viewplan::ViewPlan& plan, const roadgraph::RoadGraph& g);

/// Visible asset set by scanning every asset with plain trigonometry.
std::set<FmssId> visible_by_angle(Vec2 at, Vec2 look_dir, const world::SyntheticWorld& w, double d_max, double fov_deg);

}  // namespace ursa::oracle
