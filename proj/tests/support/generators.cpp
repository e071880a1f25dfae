#include "generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace ursa::testing {

using roadgraph::RoadEdge;
using roadgraph::RoadType;
using roadgraph::RoadVertex;
using roadgraph::VertexId;

namespace {

RoadType random_type(Rng& rng, double major_fraction) {
    if (rng.uniform() < major_fraction) return RoadType::major;
    static constexpr RoadType others[] = {RoadType::minor, RoadType::dirt, RoadType::alley};
    return others[rng.below(3)];
}

std::vector<VertexId> shuffled_ids(Rng& rng, std::size_t n) {
    std::vector<VertexId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<VertexId>(3 * i + rng.below(3));
    for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);
    return ids;
}

RoadGraph assemble(Rng& rng, const std::vector<Vec2>& pts, const std::set<std::pair<std::size_t, std::size_t>>& links,
                   double major_fraction) {
    const auto ids = shuffled_ids(rng, pts.size());
    std::vector<RoadVertex> vs;
    for (std::size_t i = 0; i < pts.size(); ++i) vs.push_back({ids[i], pts[i], random_type(rng, major_fraction)});
    std::vector<RoadEdge> es;
    for (auto [a, b] : links) es.push_back({ids[a], ids[b]});
    return RoadGraph(std::move(vs), std::move(es));
}

std::pair<std::size_t, std::size_t> ordered(std::size_t a, std::size_t b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

FmssId fmss(int i) {
    return {"props/p" + std::to_string(i % 7) + ".ydr", "m" + std::to_string(i / 7), i % 3, i % 2};
}

RoadGraph random_road_graph(Rng& rng, std::size_t n, double major_fraction) {
    const double side = 45.0 * std::sqrt(static_cast<double>(n));
    std::vector<Vec2> pts;
    while (pts.size() < n) {
        const Vec2 p{std::round(rng.uniform(0.0, side) * 4.0) / 4.0, std::round(rng.uniform(0.0, side) * 4.0) / 4.0};
        const bool clear = std::all_of(pts.begin(), pts.end(), [&](Vec2 q) { return distance(p, q) >= 1.0; });
        if (clear) pts.push_back(p);
    }
    std::set<std::pair<std::size_t, std::size_t>> links;
    for (std::size_t i = 1; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < i; ++j) {
            if (distance(pts[i], pts[j]) < distance(pts[i], pts[best])) best = j;
        }
        links.insert(ordered(i, best));
    }
    const std::size_t extra = n / 4 + rng.below(n / 4 + 1);
    for (std::size_t e = 0; e < extra; ++e) {
        const std::size_t i = rng.below(n);
        std::size_t best = i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || links.contains(ordered(i, j))) continue;
            if (best == i || distance(pts[i], pts[j]) < distance(pts[i], pts[best])) best = j;
        }
        if (best != i) links.insert(ordered(i, best));
    }
    return assemble(rng, pts, links, major_fraction);
}

RoadGraph grid_graph(Rng& rng, std::size_t rows, std::size_t cols, double spacing) {
    std::vector<Vec2> pts;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            pts.push_back({c * spacing + rng.uniform(-0.2, 0.2) * spacing, r * spacing + rng.uniform(-0.2, 0.2) * spacing});
        }
    }
    std::set<std::pair<std::size_t, std::size_t>> links;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            if (c + 1 < cols && rng.uniform() < 0.9) links.insert({i, i + 1});
            if (r + 1 < rows && rng.uniform() < 0.9) links.insert({i, i + cols});
        }
    }
    return assemble(rng, pts, links, 0.85);
}

RoadGraph chain_graph(std::size_t n, double step, double heading_rad) {
    std::vector<RoadVertex> vs;
    std::vector<RoadEdge> es;
    const Vec2 dir{std::cos(heading_rad), std::sin(heading_rad)};
    for (std::size_t i = 0; i < n; ++i) {
        vs.push_back({static_cast<VertexId>(i), dir * (step * static_cast<double>(i)), RoadType::major});
        if (i > 0) es.push_back({static_cast<VertexId>(i - 1), static_cast<VertexId>(i)});
    }
    return RoadGraph(std::move(vs), std::move(es));
}

RoadGraph interchange_graph(Rng& rng, std::size_t junctions) {
    std::vector<Vec2> pts;
    std::set<std::pair<std::size_t, std::size_t>> links;
    std::vector<std::vector<std::size_t>> groups;
    const double side = 160.0 * std::sqrt(static_cast<double>(junctions));
    for (std::size_t j = 0; j < junctions; ++j) {
        const Vec2 c{rng.uniform(0.0, side), rng.uniform(0.0, side)};
        const std::size_t k = 3 + rng.below(4);
        std::vector<std::size_t> g;
        for (std::size_t m = 0; m < k; ++m) {
            const double a = 2.0 * std::numbers::pi * (static_cast<double>(m) + rng.uniform(0.0, 0.3)) / k;
            g.push_back(pts.size());
            pts.push_back(c + Vec2{std::cos(a), std::sin(a)} * rng.uniform(4.0, 10.0));
        }
        for (std::size_t m = 0; m < k; ++m) links.insert(ordered(g[m], g[(m + 1) % k]));
        groups.push_back(std::move(g));
    }
    for (std::size_t j = 1; j < junctions; ++j) {
        const auto& a = groups[j];
        const auto& b = groups[rng.below(j)];
        links.insert(ordered(a[rng.below(a.size())], b[rng.below(b.size())]));
        if (rng.uniform() < 0.4) links.insert(ordered(a[rng.below(a.size())], b[rng.below(b.size())]));
    }
    return assemble(rng, pts, links, 0.9);
}

RoadGraph any_graph(Rng& rng, std::size_t max_vertices) {
    max_vertices = std::max<std::size_t>(max_vertices, 5);
    switch (rng.below(4)) {
        case 0: {
            const std::size_t cols = 2 + rng.below(std::max<std::size_t>(1, std::min<std::size_t>(13, max_vertices / 2 - 1)));
            const std::size_t rows = std::max<std::size_t>(3, std::min<std::size_t>(max_vertices / cols, 14));
            if (rows * cols >= 5 && rows * cols <= max_vertices) return grid_graph(rng, rows, cols, rng.uniform(20.0, 60.0));
            return random_road_graph(rng, 5 + rng.below(max_vertices - 4));
        }
        case 1:
            return chain_graph(5 + rng.below(max_vertices - 4), rng.uniform(5.0, 40.0), rng.uniform(0.0, 6.28));
        case 2: {
            const std::size_t j = 2 + rng.below(std::max<std::size_t>(1, max_vertices / 6 - 1));
            if (j * 6 <= max_vertices) return interchange_graph(rng, j);
            return random_road_graph(rng, 5 + rng.below(max_vertices - 4));
        }
        default:
            return random_road_graph(rng, 5 + rng.below(max_vertices - 4));
    }
}

std::vector<roadgraph::LabeledPoint> random_point_set(Rng& rng, std::size_t max_points) {
    const std::size_t n = 1 + rng.below(max_points);
    std::vector<Vec2> centers(1 + rng.below(6));
    for (auto& c : centers) c = {std::floor(rng.uniform(0.0, 300.0)), std::floor(rng.uniform(0.0, 300.0))};
    std::vector<roadgraph::LabeledPoint> pts;
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 p;
        if (rng.uniform() < 0.2) {
            p = {std::floor(rng.uniform(0.0, 300.0)), std::floor(rng.uniform(0.0, 300.0))};
        } else {
            const Vec2 c = centers[rng.below(centers.size())];
            p = c + Vec2{std::floor(rng.uniform(-15.0, 15.0)), std::floor(rng.uniform(-15.0, 15.0))};
        }
        pts.push_back({static_cast<VertexId>(1000 - 3 * i), p});
    }
    return pts;
}

compositor::ContributionStack random_stack(Rng& rng, std::size_t w, std::size_t h, std::size_t max_layers) {
    compositor::ContributionStack s;
    s.width = w;
    s.height = h;
    std::set<int> used;
    const std::size_t layers = rng.below(max_layers + 1);
    while (used.size() < layers) used.insert(static_cast<int>(rng.below(40)));
    std::vector<int> order(used.begin(), used.end());
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    static constexpr float grid[] = {0.0f, 0.25f, 0.5f, 0.75f, 1.0f};
    for (int id : order) {
        compositor::ContributionLayer layer{fmss(id), std::vector<float>(w * h)};
        for (auto& x : layer.weights) {
            x = rng.uniform() < 0.7 ? grid[rng.below(5)] : static_cast<float>(rng.uniform());
        }
        s.layers.push_back(std::move(layer));
    }
    return s;
}

}  // namespace ursa::testing
