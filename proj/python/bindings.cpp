#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ursa/annotation.hpp"
#include "ursa/cli.hpp"
#include "ursa/compositor.hpp"
#include "ursa/error.hpp"
#include "ursa/io.hpp"
#include "ursa/roadgraph.hpp"
#include "ursa/taxonomy.hpp"
#include "ursa/viewplan.hpp"
#include "ursa/world.hpp"

namespace py = pybind11;
using namespace ursa;
using compositor::LabelMap;
using roadgraph::VertexId;

namespace {

using LabelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

py::array_t<std::uint8_t> to_array(const LabelMap& m) {
    py::array_t<std::uint8_t> out({m.height, m.width});
    std::copy(m.pixels.begin(), m.pixels.end(), out.mutable_data());
    return out;
}

LabelMap from_array(const LabelArray& a) {
    if (a.ndim() != 2) throw Error(ErrorCode::dimension_mismatch, "label map must be a 2-D array");
    LabelMap m(static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), m.pixels.begin());
    return m;
}

std::vector<std::uint8_t> to_bytes(const py::bytes& b) {
    const std::string s = b;
    return {s.begin(), s.end()};
}

py::bytes from_bytes(const std::vector<std::uint8_t>& v) {
    return {reinterpret_cast<const char*>(v.data()), v.size()};
}

py::tuple xy(Vec2 v) { return py::make_tuple(v.x, v.y); }

py::object optional_double(const std::optional<double>& v) { return v ? py::object(py::float_(*v)) : py::none(); }

}  // namespace

PYBIND11_MODULE(_ursa, m) {
    m.doc() = "Road-scene view planning, label compositing and vote aggregation";

    static py::exception<Error> error(m, "UrsaError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object inst = py::reinterpret_borrow<py::object>(error)(e.what());
            inst.attr("code") = std::string(error_code_name(e.code()));
            inst.attr("where") = e.where();
            py::set_error(error, inst);
        }
    });

    m.def("data_dir", [] { return io::data_dir().string(); }, "Directory holding the shipped class tables.");

    // Road graphs.
    py::class_<roadgraph::RoadGraph>(m, "RoadGraph")
        .def_static("from_json", &roadgraph::parse_road_graph, py::arg("text"))
        .def("to_json", &roadgraph::serialize_road_graph)
        .def("__len__", &roadgraph::RoadGraph::size)
        .def("vertex_ids",
             [](const roadgraph::RoadGraph& g) {
                 std::vector<VertexId> ids;
                 for (const auto& v : g.vertices()) ids.push_back(v.id);
                 return ids;
             })
        .def("position", [](const roadgraph::RoadGraph& g, VertexId id) { return xy(g.position(id)); })
        .def("road_type",
             [](const roadgraph::RoadGraph& g, VertexId id) {
                 return std::string(roadgraph::road_type_name(g.vertex(id).road_type));
             })
        .def("neighbors",
             [](const roadgraph::RoadGraph& g, VertexId id) {
                 const auto nb = g.neighbors(id);
                 return std::vector<VertexId>(nb.begin(), nb.end());
             })
        .def_property_readonly("fingerprint", &roadgraph::RoadGraph::fingerprint);

    m.def(
        "partition",
        [](const roadgraph::RoadGraph& g) {
            const auto p = roadgraph::partition_vertices(g);
            py::dict d;
            d["simple"] = std::vector<VertexId>(p.simple.begin(), p.simple.end());
            d["complex"] = std::vector<VertexId>(p.complex.begin(), p.complex.end());
            d["dead"] = std::vector<VertexId>(p.dead.begin(), p.dead.end());
            return d;
        },
        py::arg("graph"));
    m.def("shortest_path", &roadgraph::shortest_path, py::arg("graph"), py::arg("source"), py::arg("target"));
    m.def(
        "cluster_interchanges",
        [](const roadgraph::RoadGraph& g, double eps, std::size_t min_pts) {
            const auto r = roadgraph::cluster_interchanges(g, roadgraph::partition_vertices(g), {eps, min_pts});
            py::list out;
            for (const auto& c : r.clusters) {
                py::dict d;
                d["members"] = c.member_ids;
                d["direction"] = xy(c.direction);
                d["centroid"] = xy(c.centroid);
                out.append(d);
            }
            return out;
        },
        py::arg("graph"), py::arg("eps") = 25.0, py::arg("min_pts") = 3);

    // View plans and worlds.
    py::class_<viewplan::ViewPlan>(m, "ViewPlan")
        .def_static("from_json", &viewplan::parse_plan, py::arg("text"), py::arg("graph"))
        .def("to_json", &viewplan::serialize_plan)
        .def_readonly("d_min", &viewplan::ViewPlan::d_min)
        .def_property_readonly("poses",
                               [](const viewplan::ViewPlan& p) {
                                   std::vector<std::pair<VertexId, VertexId>> out;
                                   for (const auto& pose : p.poses) out.emplace_back(pose.at, pose.look_to);
                                   return out;
                               })
        .def("__len__", [](const viewplan::ViewPlan& p) { return p.poses.size(); });

    py::class_<world::SyntheticWorld>(m, "World")
        .def_static("from_json", &world::parse_world, py::arg("text"))
        .def("to_json", &world::serialize_world)
        .def("__len__", [](const world::SyntheticWorld& w) { return w.assets.size(); })
        .def_property_readonly("distinct_count", [](const world::SyntheticWorld& w) { return w.distinct_ids().size(); });

    m.def("generate_world", &world::generate_world, py::arg("graph"), py::arg("density"), py::arg("seed"));

    m.def(
        "plan_viewpoints",
        [](const roadgraph::RoadGraph& g, double d_min, const std::vector<std::string>& road_types, double range,
           double fov, const world::SyntheticWorld* w) {
            viewplan::PlanConfig cfg;
            cfg.d_min = d_min;
            cfg.allowed_road_types.clear();
            for (const auto& t : road_types) cfg.allowed_road_types.insert(roadgraph::parse_road_type(t));
            cfg.camera = {range, fov};
            if (w) cfg.targets = world::coverage_targets(*w);
            const auto part = roadgraph::partition_vertices(g);
            return viewplan::select_viewpoints(g, part, roadgraph::cluster_interchanges(g, part).clusters, cfg);
        },
        py::arg("graph"), py::arg("d_min") = 30.0, py::arg("road_types") = std::vector<std::string>{"major"},
        py::arg("camera_range") = 100.0, py::arg("fov") = 90.0, py::arg("world") = nullptr,
        "Pick view poses; with a world, its assets are the coverage targets.");
    m.def(
        "check_plan",
        [](const viewplan::ViewPlan& plan, const roadgraph::RoadGraph& g) {
            py::dict d;
            d["min_separation"] = viewplan::check_min_separation(plan, g).pass;
            d["look_consistency"] = viewplan::check_look_consistency(plan, g).pass;
            return d;
        },
        py::arg("plan"), py::arg("graph"));
    m.def(
        "coverage",
        [](const viewplan::ViewPlan& plan, const roadgraph::RoadGraph& g, const world::SyntheticWorld& w, double d_max,
           double fov) {
            const auto r = world::coverage_of_plan(plan, g, w, {d_max, fov});
            py::dict d;
            d["fraction"] = r.fraction;
            d["covered"] = r.covered;
            d["total"] = r.total;
            return d;
        },
        py::arg("plan"), py::arg("graph"), py::arg("world"), py::arg("d_max") = 100.0, py::arg("fov") = 90.0);

    // Label images.
    m.def(
        "composite",
        [](const py::bytes& stack, const std::string& labeling) {
            return to_array(compositor::assign_pixels(compositor::read_stack(to_bytes(stack)),
                                                      compositor::parse_labeling(labeling)));
        },
        py::arg("stack"), py::arg("labeling"), "Label map (height x width) from stack-file bytes and a labeling document.");
    m.def(
        "encode_ppm",
        [](const LabelArray& labels, const std::string& palette_csv) {
            return from_bytes(compositor::encode_label_map(from_array(labels), compositor::parse_palette_csv(palette_csv)));
        },
        py::arg("labels"), py::arg("palette_csv"));
    m.def(
        "decode_ppm",
        [](const py::bytes& ppm, const std::string& palette_csv) {
            return to_array(compositor::decode_label_map(to_bytes(ppm), compositor::parse_palette_csv(palette_csv)));
        },
        py::arg("ppm"), py::arg("palette_csv"));
    m.def(
        "remap",
        [](const LabelArray& labels, const std::string& remap_csv) {
            return to_array(taxonomy::remap_label_map(from_array(labels), taxonomy::parse_remap_csv(remap_csv)));
        },
        py::arg("labels"), py::arg("remap_csv"));
    m.def(
        "class_iou",
        [](const LabelArray& pred, const LabelArray& gt, const std::string& taxonomy_csv, bool absent_as_zero) {
            const auto t = taxonomy::load_taxonomy(taxonomy_csv);
            const auto r = taxonomy::class_iou(from_array(pred), from_array(gt), t,
                                               absent_as_zero ? taxonomy::AbsentClassPolicy::zero
                                                              : taxonomy::AbsentClassPolicy::exclude);
            py::list per_class;
            for (const auto& c : r.per_class) per_class.append(optional_double(c.iou));
            py::dict d;
            d["per_class"] = per_class;
            d["mean"] = optional_double(r.mean);
            return d;
        },
        py::arg("pred"), py::arg("gt"), py::arg("taxonomy_csv"), py::arg("absent_as_zero") = false);

    // Votes.
    m.def(
        "aggregate_labels",
        [](const std::string& ballots) {
            return compositor::serialize_labeling(annotation::aggregate_labels(annotation::parse_ballots(ballots)));
        },
        py::arg("ballots"), "Plurality labeling document from a ballots document.");
    m.def(
        "simulate_votes",
        [](const std::string& gold, double accuracy, std::size_t class_count, std::uint64_t seed, int votes) {
            return annotation::serialize_ballots(
                annotation::simulate_votes(compositor::parse_labeling(gold), {accuracy, class_count, seed}, votes));
        },
        py::arg("gold"), py::arg("accuracy"), py::arg("class_count") = 28, py::arg("seed") = 0, py::arg("votes") = 7);
    m.def(
        "accuracy_curve",
        [](const std::string& ballots, int k_max) {
            std::vector<std::tuple<int, double, double>> out;
            for (const auto& p : annotation::accuracy_vs_votes(annotation::parse_ballots(ballots), k_max)) {
                out.emplace_back(p.k, p.accuracy, p.std_error);
            }
            return out;
        },
        py::arg("ballots"), py::arg("k_max"), "(k, accuracy, std_error) rows.");
    m.def(
        "diminishing_returns_point",
        [](const std::vector<std::tuple<int, double, double>>& rows, double target) {
            annotation::AccuracyCurve curve;
            for (const auto& [k, acc, se] : rows) curve.push_back({k, acc, se, 0});
            return annotation::diminishing_returns_point(curve, target);
        },
        py::arg("curve"), py::arg("target") = 0.75);
    m.def(
        "vote_stats",
        [](const std::string& ballots, std::uint32_t max_scene_count) {
            const auto s = annotation::vote_stats(annotation::parse_ballots(ballots), max_scene_count);
            py::dict d;
            d["total"] = s.total;
            d["eligible"] = s.eligible;
            d["excluded"] = s.excluded;
            d["mean_votes"] = optional_double(s.mean_votes);
            d["excluded_fraction"] = s.excluded_fraction;
            return d;
        },
        py::arg("ballots"), py::arg("max_scene_count") = 11);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int status = 0;
            {
                py::gil_scoped_release release;
                status = cli::run(args, out, err);
            }
            return py::make_tuple(status, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (status, stdout, stderr).");
}
