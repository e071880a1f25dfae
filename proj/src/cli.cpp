#include "ursa/cli.hpp"

#include <algorithm>
#include <csignal>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "ursa/annotation.hpp"
#include "ursa/compositor.hpp"
#include "ursa/error.hpp"
#include "ursa/io.hpp"
#include "ursa/roadgraph.hpp"
#include "ursa/service.hpp"
#include "ursa/taxonomy.hpp"
#include "ursa/viewplan.hpp"
#include "ursa/world.hpp"

namespace ursa::cli {

using nlohmann::json;

namespace {

/// Every tunable of a pipeline run. Defaults mirror the library defaults.
struct PipelineConfig {
    std::string graph, plan, world, out;
    std::string taxonomy, palette, src_palette, dst_palette, remap_table;
    std::string stack, labeling, input, pred, gt, segments, ballots, votes, gold, data_dir;
    std::vector<std::string> road_types{"major"};
    double d_min = 30.0;
    double d_max = 100.0;
    double fov = 90.0;
    double eps = 25.0;
    std::size_t min_pts = 3;
    double density = 5.0;
    int vote_target = 7;
    double annotator_p = 0.75;
    std::size_t class_count = 28;
    std::uint64_t seed = 0;
    double target_accuracy = 0.75;
    int k_max = 0;
    std::uint32_t max_scene_count = 11;
    std::size_t max_scenes = 6;
    std::size_t max_segments = 270;
    int time_limit = 20;
    int port = 8080;
    std::string host = "127.0.0.1";
    bool absent_as_zero = false;
};

std::string data_file(const std::string& flag_value, const char* shipped) {
    return flag_value.empty() ? (io::data_dir() / shipped).string() : flag_value;
}

void emit(const std::string& path, std::string_view text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        io::write_text(path, text);
    }
}

json fmss_list(const std::set<FmssId>& ids) {
    json arr = json::array();
    for (const auto& id : ids) arr.push_back(id);
    return arr;
}

roadgraph::RoadGraph load_graph(const std::string& path) { return roadgraph::parse_road_graph(io::read_text(path)); }

int cmd_plan(const PipelineConfig& c, std::ostream& out) {
    const auto g = load_graph(c.graph);
    const auto part = roadgraph::partition_vertices(g);
    const auto clusters = roadgraph::cluster_interchanges(g, part, {c.eps, c.min_pts});
    viewplan::PlanConfig cfg;
    cfg.d_min = c.d_min;
    cfg.allowed_road_types.clear();
    for (const auto& t : c.road_types) cfg.allowed_road_types.insert(roadgraph::parse_road_type(t));
    cfg.camera = {c.d_max, c.fov};
    if (!c.world.empty()) cfg.targets = world::coverage_targets(world::parse_world(io::read_text(c.world)));
    const auto plan = viewplan::select_viewpoints(g, part, clusters.clusters, cfg);
    const auto text = viewplan::serialize_plan(plan);
    if (c.out.empty()) {
        out << text;
        return 0;
    }
    io::write_text(c.out, text);
    const auto stats = viewplan::plan_stats(plan, g);
    json summary{{"poses", stats.pose_count}, {"clusters", clusters.clusters.size()}};
    summary["mean_nn_spacing"] = stats.mean_nn_spacing ? json(*stats.mean_nn_spacing) : json(nullptr);
    for (const auto& [type, n] : stats.per_road_type) summary["per_road_type"][roadgraph::road_type_name(type)] = n;
    out << summary.dump() << "\n";
    return 0;
}

int cmd_coverage(const PipelineConfig& c, std::ostream& out) {
    const auto g = load_graph(c.graph);
    const auto plan = viewplan::parse_plan(io::read_text(c.plan), g);
    const auto w = world::parse_world(io::read_text(c.world));
    const world::VisibilityParams vp{c.d_max, c.fov};
    const auto report = world::coverage_of_plan(plan, g, w, vp);
    const auto sep = viewplan::check_min_separation(plan, g);
    const auto look = viewplan::check_look_consistency(plan, g);
    json doc{{"fraction", report.fraction},
             {"covered", report.covered},
             {"total", report.total},
             {"uncovered", fmss_list(report.uncovered)},
             {"min_separation", sep.pass},
             {"look_consistency", look.pass}};
    emit(c.out, doc.dump(2) + "\n", out);
    return 0;
}

int cmd_gen_world(const PipelineConfig& c, std::ostream& out) {
    const auto g = load_graph(c.graph);
    emit(c.out, world::serialize_world(world::generate_world(g, c.density, c.seed)), out);
    return 0;
}

int cmd_composite(const PipelineConfig& c, std::ostream&) {
    const auto stack = compositor::read_stack(io::read_bytes(c.stack));
    const auto labeling = compositor::parse_labeling(io::read_text(c.labeling));
    const auto palette = compositor::parse_palette_csv(io::read_text(data_file(c.palette, "ursa_palette.csv")));
    io::write_bytes(c.out, compositor::encode_label_map(compositor::assign_pixels(stack, labeling), palette));
    return 0;
}

int cmd_remap(const PipelineConfig& c, std::ostream&) {
    const auto src = compositor::parse_palette_csv(io::read_text(data_file(c.src_palette, "ursa_palette.csv")));
    const auto dst = compositor::parse_palette_csv(io::read_text(data_file(c.dst_palette, "cityscapes_palette.csv")));
    const auto table = taxonomy::parse_remap_csv(io::read_text(data_file(c.remap_table, "ursa_to_cityscapes.csv")));
    const auto map = compositor::decode_label_map(io::read_bytes(c.input), src);
    io::write_bytes(c.out, compositor::encode_label_map(taxonomy::remap_label_map(map, table), dst));
    return 0;
}

int cmd_iou(const PipelineConfig& c, std::ostream& out) {
    const auto palette = compositor::parse_palette_csv(io::read_text(data_file(c.palette, "ursa_palette.csv")));
    const auto tax = taxonomy::load_taxonomy(io::read_text(data_file(c.taxonomy, "ursa_classes.csv")));
    const auto pred = compositor::decode_label_map(io::read_bytes(c.pred), palette);
    const auto gt = compositor::decode_label_map(io::read_bytes(c.gt), palette);
    const auto policy = c.absent_as_zero ? taxonomy::AbsentClassPolicy::zero : taxonomy::AbsentClassPolicy::exclude;
    emit(c.out, taxonomy::iou_report_json(taxonomy::class_iou(pred, gt, tax, policy), tax), out);
    return 0;
}

int cmd_tasks(const PipelineConfig& c, std::ostream& out) {
    const auto segments = annotation::parse_segments(io::read_text(c.segments));
    const auto tasks = annotation::build_tasks(segments, {c.max_scenes, c.max_segments, c.time_limit});
    emit(c.out, annotation::serialize_tasks(tasks), out);
    return 0;
}

int cmd_serve(const PipelineConfig& c, std::ostream& out) {
    const std::filesystem::path dir = c.data_dir;
    auto tasks = annotation::parse_tasks(io::read_text(dir / "tasks.json"));
    auto tax = taxonomy::load_taxonomy(io::read_text(data_file(c.taxonomy, "ursa_classes.csv")));
    auto palette = compositor::parse_palette_csv(io::read_text(data_file(c.palette, "ursa_palette.csv")));
    service::ServiceOptions opts;
    opts.votes_per_task = static_cast<std::size_t>(c.vote_target);
    opts.data_dir = dir;
    service::AnnotationService svc(std::move(tasks), std::move(tax), std::move(palette), opts);
    service::HttpServer server(svc, dir / "static");
    out << "serving " << svc.tasks().size() << " tasks on http://" << c.host << ":" << c.port << "\n" << std::flush;
    if (!server.listen(c.host, c.port)) throw Error(ErrorCode::io_error, "cannot listen on port " + std::to_string(c.port));
    return 0;
}

std::vector<annotation::Ballot> load_ballots(const PipelineConfig& c) {
    if (!c.ballots.empty()) return annotation::parse_ballots(io::read_text(c.ballots));
    if (c.votes.empty()) throw Error(ErrorCode::invalid_argument, "one of --ballots or --votes is required");
    std::map<FmssId, annotation::Ballot> by_id;
    for (auto& v : annotation::read_vote_log(c.votes)) {
        auto& b = by_id[v.fmss];
        b.fmss = v.fmss;
        b.votes.push_back(std::move(v));
    }
    std::vector<annotation::Ballot> out;
    for (auto& [id, b] : by_id) {
        std::stable_sort(b.votes.begin(), b.votes.end(), [](const auto& l, const auto& r) { return l.ts_ms < r.ts_ms; });
        out.push_back(std::move(b));
    }
    return out;
}

int cmd_simulate(const PipelineConfig& c, std::ostream& out) {
    const auto gold = compositor::parse_labeling(io::read_text(c.gold));
    const annotation::AnnotatorModel model{c.annotator_p, c.class_count, c.seed};
    emit(c.out, annotation::serialize_ballots(annotation::simulate_votes(gold, model, c.vote_target)), out);
    return 0;
}

int cmd_aggregate(const PipelineConfig& c, std::ostream& out) {
    emit(c.out, compositor::serialize_labeling(annotation::aggregate_labels(load_ballots(c))), out);
    return 0;
}

int cmd_curve(const PipelineConfig& c, std::ostream& out) {
    annotation::AccuracyCurve curve;
    const std::string text = c.ballots.empty() ? std::string{} : io::read_text(c.ballots);
    if (text.find("k,accuracy,stderr") != std::string::npos) {
        curve = annotation::parse_curve_csv(text);
    } else {
        const auto ballots = load_ballots(c);
        int k_max = c.k_max;
        if (k_max <= 0) {
            std::size_t fewest = 0;
            bool any = false;
            for (const auto& b : ballots) {
                if (!b.gold) continue;
                fewest = any ? std::min(fewest, b.votes.size()) : b.votes.size();
                any = true;
            }
            k_max = static_cast<int>(fewest);
        }
        curve = annotation::accuracy_vs_votes(ballots, k_max);
    }
    const auto k_star = annotation::diminishing_returns_point(curve, c.target_accuracy);
    const std::string csv = annotation::curve_to_csv(curve);
    if (c.out.empty()) {
        out << csv;
    } else {
        io::write_text(c.out, csv);
    }
    out << "k*=" << (k_star ? std::to_string(*k_star) : std::string("none")) << "\n";
    return 0;
}

int cmd_stats(const PipelineConfig& c, std::ostream& out) {
    const auto ballots = load_ballots(c);
    const auto s = annotation::vote_stats(ballots, c.max_scene_count);
    json doc{{"total", s.total},
             {"eligible", s.eligible},
             {"excluded", s.excluded},
             {"excluded_fraction", s.excluded_fraction},
             {"threshold_percentile", s.threshold_percentile},
             {"max_scene_count", c.max_scene_count}};
    doc["mean_votes"] = s.mean_votes ? json(*s.mean_votes) : json(nullptr);
    emit(c.out, doc.dump(2) + "\n", out);
    return 0;
}

void report_error(std::ostream& err, bool as_json, std::string_view code, const std::string& message,
                  const std::string& where = {}) {
    if (as_json) {
        json doc{{"error", code}, {"message", message}};
        if (!where.empty()) doc["where"] = where;
        err << doc.dump() << "\n";
    } else {
        err << "error: " << message << "\n";
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    PipelineConfig c;
    bool as_json = false;
    CLI::App app{"Road-scene annotation pipeline: view planning, label compositing and vote aggregation", "ursa"};
    app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
    app.add_flag("--json", as_json, "Print errors as JSON on standard error");
    app.require_subcommand(1);

    auto positive = CLI::PositiveNumber;

    auto* plan = app.add_subcommand("plan", "Select view poses for a road graph");
    plan->add_option("--graph", c.graph, "Road graph JSON")->required()->check(CLI::ExistingFile);
    plan->add_option("--dmin", c.d_min, "Minimum separation between view vertices (m)")->check(positive);
    plan->add_option("--eps", c.eps, "Interchange clustering radius (m)")->check(positive);
    plan->add_option("--min-pts", c.min_pts, "Interchange clustering density threshold")->check(CLI::Range(1, 1 << 20));
    plan->add_option("--road-types", c.road_types, "Road types eligible for views")
        ->check(CLI::IsMember({"major", "minor", "dirt", "alley"}));
    plan->add_option("--world", c.world, "World JSON whose assets the plan should cover (default: road corridors)")
        ->check(CLI::ExistingFile);
    plan->add_option("--dmax", c.d_max, "Camera range (m)")->check(positive);
    plan->add_option("--fov", c.fov, "Camera field of view (degrees)")->check(CLI::Range(1e-9, 360.0));
    plan->add_option("--out", c.out, "Plan JSON output (stdout when omitted)");

    auto* cov = app.add_subcommand("coverage", "Coverage of a plan over a synthetic world");
    cov->add_option("--graph", c.graph, "Road graph JSON")->required()->check(CLI::ExistingFile);
    cov->add_option("--plan", c.plan, "Plan JSON")->required()->check(CLI::ExistingFile);
    cov->add_option("--world", c.world, "World JSON")->required()->check(CLI::ExistingFile);
    cov->add_option("--dmax", c.d_max, "Visibility cutoff distance (m)")->check(positive);
    cov->add_option("--fov", c.fov, "Horizontal field of view (degrees)")->check(CLI::Range(1e-9, 360.0));
    cov->add_option("--out", c.out, "Report JSON output (stdout when omitted)");

    auto* gen = app.add_subcommand("gen-world", "Scatter synthetic assets along a road graph");
    gen->add_option("--graph", c.graph, "Road graph JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--density", c.density, "Assets per 100 m of road")->check(positive);
    gen->add_option("--seed", c.seed, "Random seed");
    gen->add_option("--out", c.out, "World JSON output (stdout when omitted)");

    auto* comp = app.add_subcommand("composite", "Max-influence label map from a contribution stack");
    comp->add_option("--stack", c.stack, "Contribution stack file")->required()->check(CLI::ExistingFile);
    comp->add_option("--labeling", c.labeling, "FMSS labeling JSON")->required()->check(CLI::ExistingFile);
    comp->add_option("--palette", c.palette, "Palette CSV (default: shipped URSA palette)");
    comp->add_option("--out", c.out, "Output PPM")->required();

    auto* remap = app.add_subcommand("remap", "Remap a label image to the evaluation classes");
    remap->add_option("--in", c.input, "Input PPM")->required()->check(CLI::ExistingFile);
    remap->add_option("--table", c.remap_table, "Remap CSV (default: shipped URSA->Cityscapes)");
    remap->add_option("--src-palette", c.src_palette, "Palette of the input image");
    remap->add_option("--dst-palette", c.dst_palette, "Palette of the output image");
    remap->add_option("--out", c.out, "Output PPM")->required();

    auto* iou = app.add_subcommand("iou", "Per-class intersection over union of two label images");
    iou->add_option("--pred", c.pred, "Predicted PPM")->required()->check(CLI::ExistingFile);
    iou->add_option("--gt", c.gt, "Ground-truth PPM")->required()->check(CLI::ExistingFile);
    iou->add_option("--palette", c.palette, "Palette CSV (default: shipped URSA palette)");
    iou->add_option("--taxonomy", c.taxonomy, "Taxonomy CSV (default: shipped URSA classes)");
    iou->add_flag("--absent-as-zero", c.absent_as_zero, "Count classes absent from both maps as 0 in the mean");
    iou->add_option("--out", c.out, "Report JSON output (stdout when omitted)");

    auto* tasks = app.add_subcommand("tasks", "Pack segments into annotation tasks");
    tasks->add_option("--segments", c.segments, "Segments JSON")->required()->check(CLI::ExistingFile);
    tasks->add_option("--max-scenes", c.max_scenes, "Scenes per task")->check(CLI::Range(1, 1 << 20));
    tasks->add_option("--max-segments", c.max_segments, "Segments per task")->check(CLI::Range(1, 1 << 20));
    tasks->add_option("--time-limit", c.time_limit, "Minutes per task")->check(CLI::Range(1, 24 * 60));
    tasks->add_option("--out", c.out, "Tasks JSON output (stdout when omitted)");

    auto* serve = app.add_subcommand("serve", "Run the annotation HTTP service");
    serve->add_option("--data-dir", c.data_dir, "Directory with tasks.json, logs and static/")
        ->required()
        ->check(CLI::ExistingDirectory);
    serve->add_option("--port", c.port, "TCP port")->check(CLI::Range(1, 65535));
    serve->add_option("--host", c.host, "Bind address");
    serve->add_option("--k", c.vote_target, "Workers per task (target votes per FMSS)")->check(CLI::Range(1, 1000));
    serve->add_option("--taxonomy", c.taxonomy, "Taxonomy CSV");
    serve->add_option("--palette", c.palette, "Palette CSV");

    auto* sim = app.add_subcommand("simulate-votes", "Simulate annotator votes against gold labels");
    sim->add_option("--gold", c.gold, "Gold labeling JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--p", c.annotator_p, "Per-vote accuracy")->check(CLI::Range(0.0, 1.0));
    sim->add_option("--classes", c.class_count, "Number of classes annotators choose from")->check(CLI::Range(2, 255));
    sim->add_option("--k", c.vote_target, "Votes per FMSS")->check(CLI::Range(1, 1000));
    sim->add_option("--seed", c.seed, "Random seed");
    sim->add_option("--out", c.out, "Ballots JSON output (stdout when omitted)");

    auto* agg = app.add_subcommand("aggregate", "Plurality labels from ballots or a votes log");
    agg->add_option("--ballots", c.ballots, "Ballots JSON")->check(CLI::ExistingFile);
    agg->add_option("--votes", c.votes, "Votes log (JSON lines)")->check(CLI::ExistingFile);
    agg->add_option("--out", c.out, "Labeling JSON output (stdout when omitted)");

    auto* curve = app.add_subcommand("curve", "Accuracy-vs-votes curve and its diminishing-returns point");
    curve->add_option("--ballots", c.ballots, "Ballots JSON, or a k,accuracy,stderr CSV")
        ->required()
        ->check(CLI::ExistingFile);
    curve->add_option("--k-max", c.k_max, "Largest vote count (default: fewest votes on a gold ballot)");
    curve->add_option("--target", c.target_accuracy, "Accuracy target")->check(CLI::Range(0.0, 1.0));
    curve->add_option("--out", c.out, "Curve CSV output (stdout when omitted)");

    auto* stats = app.add_subcommand("stats", "Votes-per-FMSS statistics");
    stats->add_option("--ballots", c.ballots, "Ballots JSON")->check(CLI::ExistingFile);
    stats->add_option("--votes", c.votes, "Votes log (JSON lines)")->check(CLI::ExistingFile);
    stats->add_option("--max-scenes", c.max_scene_count, "Exclude FMSS seen in more scenes than this");
    stats->add_option("--out", c.out, "Stats JSON output (stdout when omitted)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        if (as_json || std::find(args.begin(), args.end(), "--json") != args.end()) {
            report_error(err, true, "usage", e.what());
            return 1;
        }
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (app.got_subcommand(plan)) return cmd_plan(c, out);
        if (app.got_subcommand(cov)) return cmd_coverage(c, out);
        if (app.got_subcommand(gen)) return cmd_gen_world(c, out);
        if (app.got_subcommand(comp)) return cmd_composite(c, out);
        if (app.got_subcommand(remap)) return cmd_remap(c, out);
        if (app.got_subcommand(iou)) return cmd_iou(c, out);
        if (app.got_subcommand(tasks)) return cmd_tasks(c, out);
        if (app.got_subcommand(serve)) return cmd_serve(c, out);
        if (app.got_subcommand(sim)) return cmd_simulate(c, out);
        if (app.got_subcommand(agg)) return cmd_aggregate(c, out);
        if (app.got_subcommand(curve)) return cmd_curve(c, out);
        if (app.got_subcommand(stats)) return cmd_stats(c, out);
    } catch (const Error& e) {
        report_error(err, as_json, error_code_name(e.code()), e.what(), e.where());
        return 2;
    } catch (const std::exception& e) {
        report_error(err, as_json, "internal", e.what());
        return 2;
    }
    return 1;
}

}  // namespace ursa::cli
