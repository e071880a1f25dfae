#include <unistd.h>

#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "json.hpp"
#include "ursa/annotation.hpp"
#include "ursa/cli.hpp"
#include "ursa/compositor.hpp"
#include "ursa/io.hpp"
#include "ursa/viewplan.hpp"
#include "ursa/world.hpp"

using namespace ursa;
using nlohmann::json;

namespace {

struct Result {
    int status;
    std::string out;
    std::string err;
};

Result ursa_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

struct Workdir {
    std::filesystem::path path;
    Workdir() {
        path = std::filesystem::temp_directory_path() / ("ursa-cli-" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~Workdir() { std::filesystem::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string write_graph(const Workdir& wd) {
    Rng rng(90);
    const auto file = wd / "graph.json";
    io::write_text(file, roadgraph::serialize_road_graph(testing::random_road_graph(rng, 40, 1.0)));
    return file;
}

}  // namespace

TEST_CASE("plan and coverage") {
    Workdir wd;
    const auto graph = write_graph(wd);
    const auto g = roadgraph::parse_road_graph(io::read_text(graph));

    const auto plan = ursa_cli({"plan", "--graph", graph, "--dmin", "30", "--out", wd / "p.json"});
    REQUIRE_MESSAGE(plan.status == 0, plan.err);
    const auto summary = json::parse(plan.out);
    const auto parsed = viewplan::parse_plan(io::read_text(wd / "p.json"), g);
    CHECK(summary["poses"] == parsed.poses.size());
    CHECK(parsed.d_min == 30.0);
    CHECK(viewplan::check_min_separation(parsed, g).pass);
    CHECK(viewplan::check_look_consistency(parsed, g).pass);

    // Same inputs, same bytes.
    REQUIRE(ursa_cli({"plan", "--graph", graph, "--dmin", "30", "--out", wd / "p2.json"}).status == 0);
    CHECK(io::read_text(wd / "p.json") == io::read_text(wd / "p2.json"));

    REQUIRE(ursa_cli({"gen-world", "--graph", graph, "--density", "10", "--seed", "3", "--out", wd / "w.json"}).status == 0);
    REQUIRE(ursa_cli({"gen-world", "--graph", graph, "--density", "10", "--seed", "3", "--out", wd / "w2.json"}).status == 0);
    CHECK(io::read_text(wd / "w.json") == io::read_text(wd / "w2.json"));

    const auto cov = ursa_cli({"coverage", "--graph", graph, "--plan", wd / "p.json", "--world", wd / "w.json"});
    REQUIRE_MESSAGE(cov.status == 0, cov.err);
    const auto report = json::parse(cov.out);
    const auto w = world::parse_world(io::read_text(wd / "w.json"));
    const auto expect = world::coverage_of_plan(parsed, g, w, {});
    CHECK(report["covered"] == expect.covered);
    CHECK(report["total"] == expect.total);
    CHECK(report["min_separation"] == true);
    CHECK(report["look_consistency"] == true);

    // Planning against the world's assets.
    REQUIRE(ursa_cli({"plan", "--graph", graph, "--world", wd / "w.json", "--out", wd / "pw.json"}).status == 0);
    const auto aware = viewplan::parse_plan(io::read_text(wd / "pw.json"), g);
    CHECK(world::coverage_of_plan(aware, g, w, {}).fraction >= expect.fraction);

    // Plan printed to stdout when --out is omitted.
    const auto to_stdout = ursa_cli({"plan", "--graph", graph, "--dmin", "30"});
    CHECK(to_stdout.out == io::read_text(wd / "p.json"));
}

TEST_CASE("config file with flag overrides") {
    Workdir wd;
    const auto graph = write_graph(wd);
    io::write_text(wd / "run.conf", "# planning defaults\n[plan]\ndmin=60\n");
    REQUIRE(ursa_cli({"--config", wd / "run.conf", "plan", "--graph", graph, "--out", wd / "a.json"}).status == 0);
    const auto g = roadgraph::parse_road_graph(io::read_text(graph));
    CHECK(viewplan::parse_plan(io::read_text(wd / "a.json"), g).d_min == 60.0);
    REQUIRE(ursa_cli({"--config", wd / "run.conf", "plan", "--graph", graph, "--dmin", "25", "--out", wd / "b.json"}).status == 0);
    CHECK(viewplan::parse_plan(io::read_text(wd / "b.json"), g).d_min == 25.0);
}

TEST_CASE("label images: composite, remap, iou") {
    Workdir wd;
    Rng rng(5);
    const auto stack = testing::random_stack(rng, 12, 9, 5);
    compositor::FmssLabeling labels;
    for (const auto& l : stack.layers) labels[l.fmss] = static_cast<compositor::ClassId>(rng.below(37));
    io::write_bytes(wd / "s.stk", compositor::write_stack(stack));
    io::write_text(wd / "l.json", compositor::serialize_labeling(labels));

    const auto comp = ursa_cli({"composite", "--stack", wd / "s.stk", "--labeling", wd / "l.json", "--out", wd / "a.ppm"});
    REQUIRE_MESSAGE(comp.status == 0, comp.err);
    const auto palette = compositor::parse_palette_csv(io::read_text(io::data_dir() / "ursa_palette.csv"));
    // Unlabeled pixels need a color in the palette; the shipped palette has one.
    CHECK(compositor::decode_label_map(io::read_bytes(wd / "a.ppm"), palette) == compositor::assign_pixels(stack, labels));

    const auto iou = ursa_cli({"iou", "--pred", wd / "a.ppm", "--gt", wd / "a.ppm"});
    REQUIRE_MESSAGE(iou.status == 0, iou.err);
    CHECK(json::parse(iou.out)["mean_iou"] == 1.0);

    const auto remap = ursa_cli({"remap", "--in", wd / "a.ppm", "--out", wd / "c.ppm"});
    REQUIRE_MESSAGE(remap.status == 0, remap.err);
    const auto city = ursa_cli({"iou", "--pred", wd / "c.ppm", "--gt", wd / "c.ppm", "--palette",
                                (io::data_dir() / "cityscapes_palette.csv").string(), "--taxonomy",
                                (io::data_dir() / "cityscapes_classes.csv").string()});
    REQUIRE_MESSAGE(city.status == 0, city.err);
    CHECK(json::parse(city.out)["classes"].size() == 19);
}

TEST_CASE("votes: tasks, simulate, aggregate, curve, stats") {
    Workdir wd;
    json segs{{"segments", json::array()}};
    for (int i = 0; i < 300; ++i) {
        segs["segments"].push_back({{"fmss", testing::fmss(i)}, {"scene_id", i / 50}, {"pixel_count", 5}, {"bbox", {0, 0, 1, 1}}});
    }
    io::write_text(wd / "segs.json", segs.dump());
    const auto tasks = ursa_cli({"tasks", "--segments", wd / "segs.json"});
    REQUIRE_MESSAGE(tasks.status == 0, tasks.err);
    const auto parsed = annotation::parse_tasks(tasks.out);
    CHECK(parsed.size() == 2);

    compositor::FmssLabeling gold;
    for (int i = 0; i < 400; ++i) gold[testing::fmss(i)] = static_cast<compositor::ClassId>(i % 28);
    io::write_text(wd / "gold.json", compositor::serialize_labeling(gold));
    REQUIRE(ursa_cli({"simulate-votes", "--gold", wd / "gold.json", "--p", "1", "--k", "5", "--seed", "2", "--out",
                      wd / "b.json"}).status == 0);
    const auto agg = ursa_cli({"aggregate", "--ballots", wd / "b.json"});
    REQUIRE(agg.status == 0);
    CHECK(compositor::parse_labeling(agg.out) == gold);

    const auto curve = ursa_cli({"curve", "--ballots", wd / "b.json"});
    REQUIRE_MESSAGE(curve.status == 0, curve.err);
    CHECK(curve.out.starts_with("k,accuracy,stderr\n1,1.0,"));
    CHECK(curve.out.ends_with("k*=1\n"));

    const auto shipped = ursa_cli({"curve", "--ballots", (io::data_dir() / "vote_accuracy_curve.csv").string(), "--target", "0.75"});
    REQUIRE_MESSAGE(shipped.status == 0, shipped.err);
    CHECK(shipped.out.ends_with("k*=7\n"));
    CHECK(ursa_cli({"curve", "--ballots", (io::data_dir() / "vote_accuracy_curve.csv").string(), "--target", "1.0"})
              .out.ends_with("k*=none\n"));

    const auto stats = ursa_cli({"stats", "--ballots", wd / "b.json"});
    REQUIRE(stats.status == 0);
    CHECK(json::parse(stats.out)["mean_votes"] == 5.0);

    const auto s1 = ursa_cli({"simulate-votes", "--gold", wd / "gold.json", "--p", "0.4", "--seed", "9"});
    const auto s2 = ursa_cli({"simulate-votes", "--gold", wd / "gold.json", "--p", "0.4", "--seed", "9"});
    CHECK(s1.out == s2.out);
}

TEST_CASE("errors") {
    Workdir wd;
    SUBCASE("unknown subcommand") { CHECK(ursa_cli({"frobnicate"}).status == 1); }
    SUBCASE("no subcommand") { CHECK(ursa_cli({}).status == 1); }
    SUBCASE("invalid flag value, reported as JSON") {
        const auto graph = write_graph(wd);
        const auto r = ursa_cli({"--json", "plan", "--graph", graph, "--dmin", "-3"});
        CHECK(r.status == 1);
        CHECK(json::parse(r.err)["error"] == "usage");
    }
    SUBCASE("missing file") {
        CHECK(ursa_cli({"plan", "--graph", wd / "absent.json"}).status == 1);
    }
    SUBCASE("library errors carry their code") {
        io::write_text(wd / "bad.json", R"({"vertices":[{"id":1,"x":0,"y":0,"road_type":"major"}],"edges":[[1,5]]})");
        const auto r = ursa_cli({"--json", "plan", "--graph", wd / "bad.json"});
        CHECK(r.status == 2);
        const auto doc = json::parse(r.err);
        CHECK(doc["error"] == "dangling_endpoint");
        CHECK(doc["where"].get<std::string>().find("edges") != std::string::npos);
    }
    SUBCASE("plain error text without --json") {
        io::write_text(wd / "dirt.json", R"({"vertices":[{"id":1,"x":0,"y":0,"road_type":"dirt"}]})");
        const auto r = ursa_cli({"plan", "--graph", wd / "dirt.json"});
        CHECK(r.status == 2);
        CHECK(r.err.starts_with("error: "));
    }
    SUBCASE("help lists the subcommands") {
        const auto r = ursa_cli({"--help"});
        CHECK(r.status == 0);
        for (const char* sub : {"plan", "coverage", "gen-world", "composite", "remap", "iou", "tasks", "serve",
                                "simulate-votes", "aggregate", "curve", "stats"}) {
            CHECK_MESSAGE(r.out.find(sub) != std::string::npos, sub);
        }
    }
}
