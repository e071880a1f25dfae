#include <algorithm>
#include <cmath>
#include <numbers>

#include "check_error.hpp"
#include "doctest.h"
#include "generators.hpp"
#include "oracles.hpp"
#include "ursa/roadgraph.hpp"

using namespace ursa;
using namespace ursa::roadgraph;

namespace {

RoadGraph star(std::size_t spokes) {
    std::vector<RoadVertex> vs{{0, {0, 0}, RoadType::major}};
    std::vector<RoadEdge> es;
    for (std::size_t i = 1; i <= spokes; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(spokes);
        vs.push_back({static_cast<VertexId>(i), {10 * std::cos(a), 10 * std::sin(a)}, RoadType::major});
        es.push_back({0, static_cast<VertexId>(i)});
    }
    return RoadGraph(vs, es);
}

RoadGraph unit_square() {
    return RoadGraph({{0, {0, 0}}, {1, {1, 0}}, {2, {1, 1}}, {3, {0, 1}}}, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
}

Vec2 canonical(Vec2 d) { return (d.x < 0 || (d.x == 0 && d.y < 0)) ? -d : d; }

}  // namespace

TEST_CASE("parsing the graph document") {
    SUBCASE("two vertices and one edge") {
        const auto g = parse_road_graph(R"({"vertices":[{"id":0,"x":0,"y":0,"road_type":"major"},
            {"id":1,"x":10,"y":0,"road_type":"minor"}],"edges":[[0,1]]})");
        CHECK(g.size() == 2);
        CHECK(g.degree(0) == 1);
        CHECK(g.degree(1) == 1);
        CHECK(g.vertex(1).road_type == RoadType::minor);
        CHECK(g.edge_length(0, 1) == doctest::Approx(10.0));
    }
    SUBCASE("duplicate vertex id, with its location") {
        try {
            parse_road_graph(R"({"vertices":[{"id":3,"x":0,"y":0,"road_type":"major"},
                {"id":3,"x":1,"y":0,"road_type":"major"}],"edges":[]})");
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::duplicate_id);
            CHECK(e.where().find("vertices[1]") != std::string::npos);
        }
    }
    SUBCASE("dangling endpoint") {
        CHECK_URSA_ERROR(parse_road_graph(R"({"vertices":[{"id":0,"x":0,"y":0,"road_type":"major"}],"edges":[[0,99]]})"),
                         ErrorCode::dangling_endpoint);
    }
    SUBCASE("malformed input") {
        CHECK_URSA_ERROR(parse_road_graph("{\"vertices\": ["), ErrorCode::parse_error);
        CHECK_URSA_ERROR(parse_road_graph("[]"), ErrorCode::parse_error);
        CHECK_URSA_ERROR(parse_road_graph(R"({"vertices":[{"id":0,"x":0,"y":0,"road_type":"highway"}]})"),
                         ErrorCode::invalid_argument);
        CHECK_URSA_ERROR(parse_road_graph(R"({"vertices":[{"id":0,"x":0,"y":0,"road_type":"major"}],"edges":[[0,0]]})"),
                         ErrorCode::invalid_edge);
        CHECK_URSA_ERROR(parse_road_graph(R"({"vertices":[{"id":0,"x":0,"y":0,"road_type":"major"},
            {"id":1,"x":1,"y":0,"road_type":"major"}],"edges":[[0,1],[1,0]]})"),
                         ErrorCode::invalid_edge);
    }
    SUBCASE("edges are optional and ids need not be contiguous") {
        const auto g = parse_road_graph(R"({"vertices":[{"id":70,"x":1,"y":2,"road_type":"alley"}]})");
        CHECK(g.contains(70));
        CHECK_URSA_ERROR(g.vertex(0), ErrorCode::unknown_vertex);
    }
}

TEST_CASE("serialization round-trips random graphs") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const auto g = testing::any_graph(rng, 60);
        const auto back = parse_road_graph(serialize_road_graph(g));
        CHECK(back.fingerprint() == g.fingerprint());
        CHECK(back.edges() == g.edges());
        CHECK(serialize_road_graph(back) == serialize_road_graph(g));
    }
}

TEST_CASE("degree partition") {
    SUBCASE("chain a-b-c") {
        const auto p = partition_vertices(testing::chain_graph(3, 10.0));
        CHECK(p.simple == std::set<VertexId>{1});
        CHECK(p.dead == std::set<VertexId>{0, 2});
        CHECK(p.complex.empty());
    }
    SUBCASE("star with three spokes") {
        const auto p = partition_vertices(star(3));
        CHECK(p.complex == std::set<VertexId>{0});
        CHECK(p.dead == std::set<VertexId>{1, 2, 3});
        CHECK(p.simple.empty());
    }
    SUBCASE("empty graph") {
        const auto p = partition_vertices(RoadGraph{});
        CHECK(p.simple.empty());
        CHECK(p.complex.empty());
        CHECK(p.dead.empty());
    }
    SUBCASE("sets are disjoint, exhaustive and follow the degree predicates") {
        Rng rng(3);
        for (int i = 0; i < 200; ++i) {
            const auto g = testing::any_graph(rng, 80);
            const auto p = partition_vertices(g);
            CHECK(p.simple.size() + p.complex.size() + p.dead.size() == g.size());
            for (const auto& v : g.vertices()) {
                const std::size_t d = g.degree(v.id);
                const int hits = p.simple.contains(v.id) + p.complex.contains(v.id) + p.dead.contains(v.id);
                REQUIRE(hits == 1);
                CHECK(p.simple.contains(v.id) == (d == 2));
                CHECK(p.complex.contains(v.id) == (d > 2));
                CHECK(p.dead.contains(v.id) == (d < 2));
            }
        }
    }
}

TEST_CASE("shortest paths") {
    SUBCASE("direct edge") {
        const auto g = testing::chain_graph(2, 5.0);
        CHECK(shortest_path(g, 0, 1) == std::vector<VertexId>{0, 1});
        CHECK(shortest_path(g, 1, 1) == std::vector<VertexId>{1});
    }
    SUBCASE("disconnected") {
        const RoadGraph g({{0, {0, 0}}, {1, {1, 0}}, {2, {5, 5}}}, {{0, 1}});
        CHECK_FALSE(shortest_path(g, 0, 2).has_value());
        ShortestPathTree t(g, 2);
        CHECK_FALSE(t.reachable(0));
        CHECK(t.path_from(0).empty());
    }
    SUBCASE("unit square, opposite corners: two hops, smaller first hop") {
        const auto g = unit_square();
        const auto p = shortest_path(g, 0, 2);
        REQUIRE(p.has_value());
        CHECK(*p == std::vector<VertexId>{0, 1, 2});
        CHECK(path_length(g, *p) == doctest::Approx(2.0));
        CHECK(*shortest_path(g, 2, 0) == std::vector<VertexId>{2, 1, 0});
    }
    SUBCASE("unknown vertex") {
        CHECK_URSA_ERROR(shortest_path(unit_square(), 0, 9), ErrorCode::unknown_vertex);
    }
    SUBCASE("matches exhaustive enumeration on small graphs") {
        Rng rng(5);
        int compared = 0;
        for (int i = 0; i < 150; ++i) {
            const auto g = rng.below(2) ? testing::random_road_graph(rng, 5 + rng.below(6))
                                        : testing::grid_graph(rng, 2 + rng.below(2), 3, 20.0);
            REQUIRE(g.size() <= 10);
            for (const auto& a : g.vertices()) {
                for (const auto& b : g.vertices()) {
                    const auto path = shortest_path(g, a.id, b.id);
                    const auto best = oracle::shortest_length_by_enumeration(g, a.id, b.id);
                    REQUIRE(path.has_value() == best.has_value());
                    if (!path) continue;
                    CHECK(path->front() == a.id);
                    CHECK(path->back() == b.id);
                    for (std::size_t k = 1; k < path->size(); ++k) CHECK(g.has_edge((*path)[k - 1], (*path)[k]));
                    CHECK(path_length(g, *path) == doctest::Approx(*best).epsilon(1e-12));
                    ++compared;
                }
            }
        }
        CHECK(compared > 1000);
    }
}

TEST_CASE("density clustering") {
    auto clump = [](VertexId first, Vec2 c) {
        std::vector<LabeledPoint> pts;
        const Vec2 offs[] = {{0, 0}, {2, 0}, {0, 2}, {-2, 0}, {0, -2}};
        for (int i = 0; i < 5; ++i) pts.push_back({first + i, c + offs[i]});
        return pts;
    };
    SUBCASE("two clumps far apart") {
        auto pts = clump(0, {0, 0});
        const auto far = clump(10, {1000, 0});
        pts.insert(pts.end(), far.begin(), far.end());
        const auto [clusters, noise] = dbscan(pts, {10.0, 3});
        CHECK(clusters.size() == 2);
        CHECK(clusters[0] == std::vector<VertexId>{0, 1, 2, 3, 4});
        CHECK(noise.empty());
    }
    SUBCASE("four mutually close points, min_pts 4") {
        const std::vector<LabeledPoint> pts{{1, {0, 0}}, {2, {3, 0}}, {3, {0, 3}}, {4, {3, 3}}};
        const auto [clusters, noise] = dbscan(pts, {10.0, 4});
        REQUIRE(clusters.size() == 1);
        CHECK(clusters[0].size() == 4);
    }
    SUBCASE("isolated point is noise") {
        const std::vector<LabeledPoint> pts{{7, {0, 0}}};
        const auto [clusters, noise] = dbscan(pts, {10.0, 3});
        CHECK(clusters.empty());
        CHECK(noise == std::vector<VertexId>{7});
    }
    SUBCASE("eps is inclusive") {
        const std::vector<LabeledPoint> pts{{1, {0, 0}}, {2, {10, 0}}};
        CHECK(dbscan(pts, {10.0, 2}).first.size() == 1);
        CHECK(dbscan(pts, {9.999, 2}).first.empty());
    }
    SUBCASE("invalid parameters") {
        const std::vector<LabeledPoint> pts{{1, {0, 0}}};
        CHECK_URSA_ERROR(dbscan(pts, {0.0, 3}), ErrorCode::invalid_argument);
        CHECK_URSA_ERROR(dbscan(pts, {5.0, 0}), ErrorCode::invalid_argument);
    }
    SUBCASE("membership does not depend on input order") {
        Rng rng(17);
        for (int i = 0; i < 100; ++i) {
            auto pts = testing::random_point_set(rng, 80);
            const DbscanParams params{static_cast<double>(5 + rng.below(20)), 1 + rng.below(5)};
            const auto before = dbscan(pts, params);
            for (std::size_t j = pts.size(); j > 1; --j) std::swap(pts[j - 1], pts[rng.below(j)]);
            const auto after = dbscan(pts, params);
            CHECK(before.first == after.first);
            CHECK(before.second == after.second);
        }
    }
    SUBCASE("interchange clusters use complex vertices only and carry unit directions") {
        Rng rng(23);
        for (int i = 0; i < 40; ++i) {
            const auto g = testing::interchange_graph(rng, 2 + rng.below(4));
            const auto part = partition_vertices(g);
            const auto result = cluster_interchanges(g, part, {25.0, 2});
            std::size_t seen = result.noise.size();
            for (const auto& c : result.clusters) {
                seen += c.member_ids.size();
                for (VertexId id : c.member_ids) CHECK(part.complex.contains(id));
                CHECK(c.direction.norm() == doctest::Approx(1.0).epsilon(1e-9));
                CHECK(std::is_sorted(c.member_ids.begin(), c.member_ids.end()));
            }
            CHECK(seen == part.complex.size());
        }
    }
}

TEST_CASE("principal direction") {
    SUBCASE("collinear on the x axis") {
        const std::vector<Vec2> pts{{0, 0}, {1, 0}, {2, 0}};
        const Vec2 d = estimate_direction(pts);
        CHECK(d.x == doctest::Approx(1.0));
        CHECK(d.y == doctest::Approx(0.0));
    }
    SUBCASE("on y = x") {
        const std::vector<Vec2> pts{{0, 0}, {1, 1}, {2, 2}, {5, 5}};
        const Vec2 d = estimate_direction(pts);
        CHECK(d.x == doctest::Approx(std::sqrt(0.5)));
        CHECK(d.y == doctest::Approx(std::sqrt(0.5)));
    }
    SUBCASE("vertical road") {
        const std::vector<Vec2> pts{{3, 0}, {3, 10}, {3, 20}};
        const Vec2 d = estimate_direction(pts);
        CHECK(d.x == doctest::Approx(0.0));
        CHECK(d.y == doctest::Approx(1.0));
    }
    SUBCASE("degenerate input") {
        const std::vector<Vec2> one{{1, 1}};
        const std::vector<Vec2> same{{1, 1}, {1, 1}, {1, 1}};
        CHECK_URSA_ERROR(estimate_direction(one), ErrorCode::invalid_argument);
        CHECK_URSA_ERROR(estimate_direction(same), ErrorCode::invalid_argument);
    }
    SUBCASE("noisy points along 30 degrees agree with an eigensolver") {
        Rng rng(30);
        const Vec2 axis{std::cos(std::numbers::pi / 6), std::sin(std::numbers::pi / 6)};
        std::vector<Vec2> pts;
        for (int i = 0; i < 50; ++i) {
            pts.push_back(axis * rng.uniform(-50.0, 50.0) + Vec2{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)});
        }
        const Vec2 d = estimate_direction(pts);
        const Vec2 ref = oracle::principal_axis(pts);
        CHECK(std::abs(dot(d, ref)) >= 1.0 - 1e-6);
        CHECK(dot(d, axis) > 0.99);
    }
    SUBCASE("rotating the points rotates the direction") {
        Rng rng(31);
        for (int i = 0; i < 200; ++i) {
            std::vector<Vec2> pts;
            const double heading = rng.uniform(0.0, std::numbers::pi);
            const Vec2 axis{std::cos(heading), std::sin(heading)};
            for (int j = 0; j < 20; ++j) {
                pts.push_back(axis * rng.uniform(-30.0, 30.0) + Vec2{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)});
            }
            const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
            std::vector<Vec2> turned;
            for (Vec2 p : pts) turned.push_back(rotated(p, theta));
            const Vec2 expect = canonical(rotated(estimate_direction(pts), theta));
            const Vec2 got = estimate_direction(turned);
            CHECK(got.x == doctest::Approx(expect.x).epsilon(1e-9));
            CHECK(got.y == doctest::Approx(expect.y).epsilon(1e-9));
        }
    }
    SUBCASE("swapping x and y swaps the components") {
        Rng rng(32);
        for (int i = 0; i < 200; ++i) {
            std::vector<Vec2> pts, swapped;
            for (int j = 0; j < 15; ++j) {
                const Vec2 p{rng.uniform(-20.0, 20.0), rng.uniform(-5.0, 5.0) + 0.7 * j};
                pts.push_back(p);
                swapped.push_back({p.y, p.x});
            }
            const Vec2 d = estimate_direction(pts);
            const Vec2 expect = canonical({d.y, d.x});
            const Vec2 got = estimate_direction(swapped);
            CHECK(got.x == doctest::Approx(expect.x).epsilon(1e-9));
            CHECK(got.y == doctest::Approx(expect.y).epsilon(1e-9));
        }
    }
}
