#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ursa/geometry.hpp"

namespace ursa::roadgraph {

using VertexId = std::int64_t;

enum class RoadType { major, minor, dirt, alley };

std::string_view road_type_name(RoadType t);
RoadType parse_road_type(std::string_view name);

struct RoadVertex {
    VertexId id = 0;
    Vec2 pos;
    RoadType road_type = RoadType::major;
};

/// Undirected edge; stored with a < b after construction.
struct RoadEdge {
    VertexId a = 0;
    VertexId b = 0;

    auto operator<=>(const RoadEdge&) const = default;
};

/// Immutable, validated road network. Edge weights are Euclidean lengths.
class RoadGraph {
public:
    RoadGraph() = default;

    /// Validates ids, endpoints and duplicate edges. Throws ursa::Error.
    RoadGraph(std::vector<RoadVertex> vertices, std::vector<RoadEdge> edges);

    const std::vector<RoadVertex>& vertices() const { return vertices_; }
    const std::vector<RoadEdge>& edges() const { return edges_; }
    std::size_t size() const { return vertices_.size(); }
    bool empty() const { return vertices_.empty(); }

    bool contains(VertexId id) const { return index_.contains(id); }
    /// Throws ErrorCode::unknown_vertex when absent.
    const RoadVertex& vertex(VertexId id) const;
    std::size_t index_of(VertexId id) const;
    Vec2 position(VertexId id) const { return vertex(id).pos; }

    /// Neighbor ids in ascending order.
    std::span<const VertexId> neighbors(VertexId id) const;
    std::size_t degree(VertexId id) const { return neighbors(id).size(); }
    bool has_edge(VertexId a, VertexId b) const;
    double edge_length(VertexId a, VertexId b) const { return distance(position(a), position(b)); }

    /// Stable content hash (hex); identifies the graph a plan was built from.
    const std::string& fingerprint() const { return fingerprint_; }

private:
    std::vector<RoadVertex> vertices_;
    std::vector<RoadEdge> edges_;
    std::unordered_map<VertexId, std::size_t> index_;
    std::vector<std::vector<VertexId>> adjacency_;
    std::string fingerprint_;
};

/// Parses the graph JSON document:
/// {"vertices":[{"id","x","y","road_type"}], "edges":[[a,b], ...]}
RoadGraph parse_road_graph(std::string_view source);
std::string serialize_road_graph(const RoadGraph& g);

struct VertexPartition {
    std::set<VertexId> simple;   // degree == 2
    std::set<VertexId> complex;  // degree > 2
    std::set<VertexId> dead;     // degree < 2
};

VertexPartition partition_vertices(const RoadGraph& g);

/// Single-target shortest-path tree. next_hop(x) is the first vertex after x
/// on the chosen shortest path from x to the target; among equally short
/// continuations the smallest vertex id wins.
class ShortestPathTree {
public:
    ShortestPathTree(const RoadGraph& g, VertexId target);

    VertexId target() const { return target_; }
    bool reachable(VertexId from) const;
    double distance_from(VertexId from) const;
    std::optional<VertexId> next_hop(VertexId from) const;
    /// Full path from `from` to the target, inclusive; empty when unreachable.
    std::vector<VertexId> path_from(VertexId from) const;

private:
    const RoadGraph* graph_;
    VertexId target_;
    std::vector<double> dist_;
    std::vector<std::int64_t> next_;  // index into graph vertices, -1 for none
};

/// Minimal-length path u..v inclusive, or nullopt when disconnected.
std::optional<std::vector<VertexId>> shortest_path(const RoadGraph& g, VertexId u, VertexId v);

double path_length(const RoadGraph& g, std::span<const VertexId> path);

struct InterchangeCluster {
    std::vector<VertexId> member_ids;  // ascending
    Vec2 direction;                    // unit, sign-normalized
    Vec2 centroid;
};

struct ClusterResult {
    std::vector<InterchangeCluster> clusters;  // ordered by smallest member id
    std::vector<VertexId> noise;               // ascending
};

struct DbscanParams {
    double eps = 25.0;
    std::size_t min_pts = 3;
};

/// Point handed to the density clusterer.
struct LabeledPoint {
    VertexId id;
    Vec2 pos;
};

/// DBSCAN over arbitrary labeled points. Core points have at least min_pts
/// points (themselves included) within eps (inclusive). A border point joins
/// the cluster of its nearest core neighbor, ties going to the smaller id, so
/// the result does not depend on input order. Returns one member list per
/// cluster (ascending ids, clusters ordered by smallest id) and the noise ids.
std::pair<std::vector<std::vector<VertexId>>, std::vector<VertexId>> dbscan(
    std::span<const LabeledPoint> points, const DbscanParams& params);

ClusterResult cluster_interchanges(const RoadGraph& g, const VertexPartition& part,
                                   const DbscanParams& params = {});

/// Principal axis of the point set (orthogonal regression). The result is a
/// unit vector whose first nonzero component is positive. Throws
/// ErrorCode::invalid_argument with fewer than two distinct points.
Vec2 estimate_direction(std::span<const Vec2> points);

}  // namespace ursa::roadgraph
