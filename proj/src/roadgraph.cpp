#include "ursa/roadgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

#include "json.hpp"
#include "ursa/error.hpp"

namespace ursa::roadgraph {

using nlohmann::json;

std::string_view road_type_name(RoadType t) {
    switch (t) {
        case RoadType::major: return "major";
        case RoadType::minor: return "minor";
        case RoadType::dirt: return "dirt";
        case RoadType::alley: return "alley";
    }
    return "major";
}

RoadType parse_road_type(std::string_view name) {
    if (name == "major") return RoadType::major;
    if (name == "minor") return RoadType::minor;
    if (name == "dirt") return RoadType::dirt;
    if (name == "alley") return RoadType::alley;
    throw Error(ErrorCode::invalid_argument, "unknown road type '" + std::string(name) + "'");
}

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace

RoadGraph::RoadGraph(std::vector<RoadVertex> vertices, std::vector<RoadEdge> edges)
    : vertices_(std::move(vertices)) {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const auto& v = vertices_[i];
        const std::string where = "vertices[" + std::to_string(i) + "]";
        if (v.id < 0) throw Error(ErrorCode::invalid_argument, "vertex id must be non-negative", where);
        if (!v.pos.finite()) throw Error(ErrorCode::invalid_argument, "vertex position must be finite", where);
        if (!index_.emplace(v.id, i).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate vertex id " + std::to_string(v.id), where);
        }
    }

    adjacency_.resize(vertices_.size());
    std::set<RoadEdge> seen;
    edges_.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::string where = "edges[" + std::to_string(i) + "]";
        auto [a, b] = edges[i];
        for (VertexId end : {a, b}) {
            if (!index_.contains(end)) {
                throw Error(ErrorCode::dangling_endpoint,
                            "edge references unknown vertex " + std::to_string(end), where);
            }
        }
        if (a == b) throw Error(ErrorCode::invalid_edge, "self-loop on vertex " + std::to_string(a), where);
        if (a > b) std::swap(a, b);
        if (!seen.insert({a, b}).second) {
            throw Error(ErrorCode::invalid_edge,
                        "duplicate edge " + std::to_string(a) + "-" + std::to_string(b), where);
        }
        edges_.push_back({a, b});
        adjacency_[index_.at(a)].push_back(b);
        adjacency_[index_.at(b)].push_back(a);
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());

    std::vector<const RoadVertex*> by_id;
    by_id.reserve(vertices_.size());
    for (const auto& v : vertices_) by_id.push_back(&v);
    std::sort(by_id.begin(), by_id.end(), [](auto* l, auto* r) { return l->id < r->id; });
    json canon = json::array();
    for (const auto* v : by_id) {
        canon.push_back({v->id, v->pos.x, v->pos.y, road_type_name(v->road_type)});
    }
    json canon_edges = json::array();
    for (const auto& e : seen) canon_edges.push_back({e.a, e.b});
    fingerprint_ = hex64(fnv1a(json{canon, canon_edges}.dump()));
}

const RoadVertex& RoadGraph::vertex(VertexId id) const { return vertices_[index_of(id)]; }

std::size_t RoadGraph::index_of(VertexId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw Error(ErrorCode::unknown_vertex, "unknown vertex id " + std::to_string(id));
    }
    return it->second;
}

std::span<const VertexId> RoadGraph::neighbors(VertexId id) const { return adjacency_[index_of(id)]; }

bool RoadGraph::has_edge(VertexId a, VertexId b) const {
    if (!contains(a) || !contains(b)) return false;
    auto adj = neighbors(a);
    return std::binary_search(adj.begin(), adj.end(), b);
}

RoadGraph parse_road_graph(std::string_view source) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse_error, e.what(), "byte " + std::to_string(e.byte));
    }
    if (!doc.is_object()) throw Error(ErrorCode::parse_error, "graph document must be an object", "$");
    if (!doc.contains("vertices") || !doc["vertices"].is_array()) {
        throw Error(ErrorCode::parse_error, "missing 'vertices' array", "$.vertices");
    }
    if (doc.contains("edges") && !doc["edges"].is_array()) {
        throw Error(ErrorCode::parse_error, "'edges' must be an array", "$.edges");
    }

    std::vector<RoadVertex> vertices;
    const auto& jv = doc["vertices"];
    for (std::size_t i = 0; i < jv.size(); ++i) {
        const std::string where = "$.vertices[" + std::to_string(i) + "]";
        const auto& v = jv[i];
        try {
            RoadVertex rv;
            rv.id = v.at("id").get<VertexId>();
            rv.pos = {v.at("x").get<double>(), v.at("y").get<double>()};
            rv.road_type = parse_road_type(v.at("road_type").get<std::string>());
            vertices.push_back(rv);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse_error, e.what(), where);
        } catch (const Error& e) {
            throw Error(e.code(), e.what(), where);
        }
    }

    std::vector<RoadEdge> edges;
    if (doc.contains("edges")) {
        const auto& je = doc["edges"];
        for (std::size_t i = 0; i < je.size(); ++i) {
            const auto& e = je[i];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
                throw Error(ErrorCode::parse_error, "edge must be a pair of integer ids",
                            "$.edges[" + std::to_string(i) + "]");
            }
            edges.push_back({e[0].get<VertexId>(), e[1].get<VertexId>()});
        }
    }

    try {
        return RoadGraph(std::move(vertices), std::move(edges));
    } catch (const Error& e) {
        throw Error(e.code(), e.what(), "$." + e.where());
    }
}

std::string serialize_road_graph(const RoadGraph& g) {
    json doc;
    doc["vertices"] = json::array();
    for (const auto& v : g.vertices()) {
        doc["vertices"].push_back(
            {{"id", v.id}, {"x", v.pos.x}, {"y", v.pos.y}, {"road_type", road_type_name(v.road_type)}});
    }
    doc["edges"] = json::array();
    for (const auto& e : g.edges()) doc["edges"].push_back({e.a, e.b});
    return doc.dump(2) + "\n";
}

VertexPartition partition_vertices(const RoadGraph& g) {
    VertexPartition part;
    for (const auto& v : g.vertices()) {
        const auto deg = g.degree(v.id);
        if (deg == 2) {
            part.simple.insert(v.id);
        } else if (deg > 2) {
            part.complex.insert(v.id);
        } else {
            part.dead.insert(v.id);
        }
    }
    return part;
}

ShortestPathTree::ShortestPathTree(const RoadGraph& g, VertexId target)
    : graph_(&g),
      target_(target),
      dist_(g.size(), std::numeric_limits<double>::infinity()),
      next_(g.size(), -1) {
    const std::size_t t = g.index_of(target);
    std::vector<bool> settled(g.size(), false);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist_[t] = 0.0;
    queue.emplace(0.0, t);
    const auto& verts = g.vertices();
    while (!queue.empty()) {
        auto [d, xi] = queue.top();
        queue.pop();
        if (settled[xi] || d > dist_[xi]) continue;
        settled[xi] = true;
        const VertexId x = verts[xi].id;

        // Pick the continuation toward the target among already settled
        // neighbors that lie on a shortest path.
        if (xi != t) {
            const double tol = 1e-9 * std::max(1.0, dist_[xi]);
            for (VertexId y : g.neighbors(x)) {
                const std::size_t yi = g.index_of(y);
                if (!settled[yi] || yi == xi) continue;
                if (std::abs(dist_[yi] + g.edge_length(x, y) - dist_[xi]) <= tol) {
                    next_[xi] = static_cast<std::int64_t>(yi);
                    break;  // neighbors ascend by id
                }
            }
        }

        for (VertexId y : g.neighbors(x)) {
            const std::size_t yi = g.index_of(y);
            if (settled[yi]) continue;
            const double nd = dist_[xi] + g.edge_length(x, y);
            if (nd < dist_[yi]) {
                dist_[yi] = nd;
                queue.emplace(nd, yi);
            }
        }
    }
}

bool ShortestPathTree::reachable(VertexId from) const {
    return std::isfinite(dist_[graph_->index_of(from)]);
}

double ShortestPathTree::distance_from(VertexId from) const { return dist_[graph_->index_of(from)]; }

std::optional<VertexId> ShortestPathTree::next_hop(VertexId from) const {
    const auto n = next_[graph_->index_of(from)];
    if (n < 0) return std::nullopt;
    return graph_->vertices()[static_cast<std::size_t>(n)].id;
}

std::vector<VertexId> ShortestPathTree::path_from(VertexId from) const {
    std::vector<VertexId> path;
    if (!reachable(from)) return path;
    const auto& verts = graph_->vertices();
    std::size_t cur = graph_->index_of(from);
    path.push_back(from);
    while (verts[cur].id != target_) {
        const auto n = next_[cur];
        if (n < 0) return {};
        cur = static_cast<std::size_t>(n);
        path.push_back(verts[cur].id);
    }
    return path;
}

std::optional<std::vector<VertexId>> shortest_path(const RoadGraph& g, VertexId u, VertexId v) {
    g.index_of(u);
    ShortestPathTree tree(g, v);
    if (!tree.reachable(u)) return std::nullopt;
    return tree.path_from(u);
}

double path_length(const RoadGraph& g, std::span<const VertexId> path) {
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) total += g.edge_length(path[i - 1], path[i]);
    return total;
}

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::pair<std::vector<std::vector<VertexId>>, std::vector<VertexId>> dbscan(
    std::span<const LabeledPoint> points, const DbscanParams& params) {
    if (!(params.eps > 0.0)) throw Error(ErrorCode::invalid_argument, "eps must be positive");
    if (params.min_pts < 1) throw Error(ErrorCode::invalid_argument, "min_pts must be at least 1");

    const std::size_t n = points.size();
    const double eps2 = params.eps * params.eps;
    auto cell_of = [&](Vec2 p) {
        return std::pair<std::int64_t, std::int64_t>{static_cast<std::int64_t>(std::floor(p.x / params.eps)),
                                                     static_cast<std::int64_t>(std::floor(p.y / params.eps))};
    };
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> grid;
    for (std::size_t i = 0; i < n; ++i) grid[cell_of(points[i].pos)].push_back(i);

    std::vector<std::vector<std::size_t>> neighborhood(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [cx, cy] = cell_of(points[i].pos);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto it = grid.find({cx + dx, cy + dy});
                if (it == grid.end()) continue;
                for (std::size_t j : it->second) {
                    const Vec2 d = points[i].pos - points[j].pos;
                    if (dot(d, d) <= eps2) neighborhood[i].push_back(j);
                }
            }
        }
    }

    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i) core[i] = neighborhood[i].size() >= params.min_pts;

    DisjointSets sets(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i]) continue;
        for (std::size_t j : neighborhood[i]) {
            if (core[j]) sets.unite(i, j);
        }
    }

    // root index of the owning core component, or npos for noise
    constexpr auto npos = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(n, npos);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            owner[i] = sets.find(i);
            continue;
        }
        std::size_t best = npos;
        double best_d2 = 0.0;
        for (std::size_t j : neighborhood[i]) {
            if (!core[j]) continue;
            const Vec2 d = points[i].pos - points[j].pos;
            const double d2 = dot(d, d);
            if (best == npos || d2 < best_d2 || (d2 == best_d2 && points[j].id < points[best].id)) {
                best = j;
                best_d2 = d2;
            }
        }
        if (best != npos) owner[i] = sets.find(best);
    }

    std::map<std::size_t, std::vector<VertexId>> groups;
    std::vector<VertexId> noise;
    for (std::size_t i = 0; i < n; ++i) {
        if (owner[i] == npos) {
            noise.push_back(points[i].id);
        } else {
            groups[owner[i]].push_back(points[i].id);
        }
    }
    std::vector<std::vector<VertexId>> clusters;
    clusters.reserve(groups.size());
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end());
        clusters.push_back(std::move(members));
    }
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& l, const auto& r) { return l.front() < r.front(); });
    std::sort(noise.begin(), noise.end());
    return {std::move(clusters), std::move(noise)};
}

ClusterResult cluster_interchanges(const RoadGraph& g, const VertexPartition& part,
                                   const DbscanParams& params) {
    std::vector<LabeledPoint> points;
    points.reserve(part.complex.size());
    for (VertexId id : part.complex) points.push_back({id, g.position(id)});

    auto [groups, noise] = dbscan(points, params);

    ClusterResult result;
    result.noise = std::move(noise);
    for (auto& members : groups) {
        InterchangeCluster cluster;
        std::vector<Vec2> pts;
        Vec2 sum;
        for (VertexId id : members) {
            pts.push_back(g.position(id));
            sum = sum + g.position(id);
        }
        cluster.centroid = sum * (1.0 / static_cast<double>(members.size()));

        // A lone interchange (or coincident members) has no spread of its
        // own; fall back to the roads entering it.
        const bool spread = std::any_of(pts.begin(), pts.end(), [&](Vec2 p) { return !(p == pts.front()); });
        if (!spread) {
            for (VertexId id : members) {
                for (VertexId nb : g.neighbors(id)) pts.push_back(g.position(nb));
            }
        }
        try {
            cluster.direction = estimate_direction(pts);
        } catch (const Error&) {
            cluster.direction = {1.0, 0.0};
        }
        cluster.member_ids = std::move(members);
        result.clusters.push_back(std::move(cluster));
    }
    return result;
}

Vec2 estimate_direction(std::span<const Vec2> points) {
    const bool distinct =
        std::any_of(points.begin(), points.end(), [&](Vec2 p) { return !(p == points.front()); });
    if (points.size() < 2 || !distinct) {
        throw Error(ErrorCode::invalid_argument, "direction needs at least two distinct points");
    }
    Vec2 mean;
    for (Vec2 p : points) mean = mean + p;
    mean = mean * (1.0 / static_cast<double>(points.size()));
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (Vec2 p : points) {
        const Vec2 d = p - mean;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    // Major-axis angle of the 2x2 scatter matrix.
    const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    Vec2 dir{std::cos(theta), std::sin(theta)};
    if (std::abs(dir.x) <= 1e-12) {
        dir.x = 0.0;
        if (dir.y < 0.0) dir.y = -dir.y;
    } else if (dir.x < 0.0) {
        dir = -dir;
    }
    return dir;
}

}  // namespace ursa::roadgraph
