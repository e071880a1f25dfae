#include <numeric>

#include "check_error.hpp"
#include "doctest.h"
#include "ursa/io.hpp"
#include "ursa/random.hpp"
#include "ursa/taxonomy.hpp"

using namespace ursa;
using namespace ursa::taxonomy;
using compositor::kUnlabeled;

namespace {

ClassTaxonomy shipped(const char* file) { return load_taxonomy(io::read_text(io::data_dir() / file)); }

LabelMap map_of(std::size_t w, std::size_t h, std::initializer_list<int> px) {
    LabelMap m(w, h);
    std::size_t i = 0;
    for (int p : px) m.pixels[i++] = static_cast<ClassId>(p);
    return m;
}

LabelMap random_map(Rng& rng, std::size_t n, int classes, double unlabeled = 0.1) {
    LabelMap m(n, n);
    for (auto& p : m.pixels) p = rng.uniform() < unlabeled ? kUnlabeled : static_cast<ClassId>(rng.below(classes));
    return m;
}

ClassTaxonomy numbered(int n) {
    std::vector<ClassEntry> cs;
    for (int i = 0; i < n; ++i) cs.push_back({static_cast<ClassId>(i), "c" + std::to_string(i)});
    return ClassTaxonomy(cs);
}

}  // namespace

TEST_CASE("taxonomies") {
    SUBCASE("shipped class lists") {
        const auto ursa = shipped("ursa_classes.csv");
        CHECK(ursa.size() == 37);
        for (const char* name : {"Pavement Marking", "Traffic Marker", "Curb", "Crosswalk", "Lane Separator"}) {
            CHECK_MESSAGE(ursa.find(name).has_value(), name);
        }
        const auto city = shipped("cityscapes_classes.csv");
        CHECK(city.size() == 19);
        CHECK(city.name(0) == "road");
    }
    SUBCASE("validation") {
        CHECK_URSA_ERROR(load_taxonomy("id,name\n0,Road\n1,Road\n"), ErrorCode::duplicate_entry);
        CHECK_URSA_ERROR(load_taxonomy("id,name\n0,Road\n0,Sky\n"), ErrorCode::duplicate_entry);
        CHECK_URSA_ERROR(load_taxonomy("id,name\n0,Road\n2,Sky\n"), ErrorCode::id_gap);
        CHECK_URSA_ERROR(load_taxonomy("id,name\n0\n"), ErrorCode::parse_error);
        CHECK_URSA_ERROR(load_taxonomy("id,name\n255,Void\n"), ErrorCode::invalid_class);
        const auto t = load_taxonomy("id,name\n1,Sky\n0,Road\n");
        CHECK(t.name(1) == "Sky");
        CHECK_URSA_ERROR(t.name(2), ErrorCode::invalid_class);
    }
}

TEST_CASE("remapping") {
    const auto ursa = shipped("ursa_classes.csv");
    const auto city = shipped("cityscapes_classes.csv");
    const auto table = parse_remap_csv(io::read_text(io::data_dir() / "ursa_to_cityscapes.csv"));
    SUBCASE("shipped table is total and points into the evaluation set") { CHECK_NOTHROW(table.validate(ursa, city)); }
    SUBCASE("identity") {
        Rng rng(1);
        const auto m = random_map(rng, 12, 37);
        CHECK(remap_label_map(m, RemapTable::identity(ursa)) == m);
    }
    SUBCASE("documented defaults") {
        const ClassId road = *city.find("road");
        for (const char* name : {"Crosswalk", "Pavement Marking", "Lane Separator"}) {
            CHECK(remap_label_map(LabelMap(4, 4, *ursa.find(name)), table) == LabelMap(4, 4, road));
        }
        CHECK(table.apply(*ursa.find("Curb")) == city.find("sidewalk"));
        for (const char* name : {"Traffic Cone", "Traffic Marker", "Construction Barrel"}) {
            CHECK_FALSE(table.apply(*ursa.find(name)).has_value());
        }
        CHECK(remap_label_map(LabelMap(1, 1, *ursa.find("Traffic Cone")), table) == LabelMap(1, 1));
    }
    SUBCASE("missing entries") {
        const RemapTable partial({{0, ClassId{1}}});
        CHECK_URSA_ERROR(remap_label_map(map_of(2, 1, {0, 5}), partial), ErrorCode::unmapped_id);
        CHECK(remap_label_map(map_of(2, 1, {0, 255}), partial) == map_of(2, 1, {1, 255}));
        CHECK_URSA_ERROR(partial.validate(ursa, city), ErrorCode::unmapped_id);
    }
    SUBCASE("table parsing") {
        const auto t = parse_remap_csv("src_id,dst_id\n0,3\n1,ignore\n");
        CHECK(t.apply(0) == std::optional<ClassId>(3));
        CHECK_FALSE(t.apply(1).has_value());
        CHECK_URSA_ERROR(parse_remap_csv("src_id,dst_id\n0,3\n0,4\n"), ErrorCode::duplicate_entry);
        CHECK_URSA_ERROR(parse_remap_csv("src_id,dst_id\n0\n"), ErrorCode::parse_error);
        CHECK_URSA_ERROR(parse_remap_csv("src_id,dst_id\n0,3\n").validate(numbered(1), numbered(2)),
                         ErrorCode::invalid_class);
    }
}

TEST_CASE("class IOU examples") {
    const auto t = numbered(4);
    SUBCASE("identical maps") {
        const auto m = map_of(2, 2, {0, 1, 1, 3});
        const auto r = class_iou(m, m, t);
        CHECK(*r.per_class[0].iou == 1.0);
        CHECK(*r.per_class[1].iou == 1.0);
        CHECK_FALSE(r.per_class[2].iou.has_value());
        CHECK(*r.mean == 1.0);
    }
    SUBCASE("disjoint classes") {
        const auto r = class_iou(map_of(2, 1, {0, 0}), map_of(2, 1, {1, 1}), t);
        CHECK(*r.per_class[0].iou == 0.0);
        CHECK(*r.per_class[1].iou == 0.0);
        CHECK(*r.mean == 0.0);
    }
    SUBCASE("TP 2, FP 1, FN 1") {
        // A = 0, everything else 1, on a 4x4 grid.
        LabelMap pred(4, 4, 1), gt(4, 4, 1);
        pred.pixels[0] = pred.pixels[1] = pred.pixels[2] = 0;
        gt.pixels[0] = gt.pixels[1] = gt.pixels[3] = 0;
        const auto r = class_iou(pred, gt, t);
        CHECK(r.per_class[0].tp == 2);
        CHECK(r.per_class[0].fp == 1);
        CHECK(r.per_class[0].fn == 1);
        CHECK(*r.per_class[0].iou == 0.5);
    }
    SUBCASE("unlabeled ground truth is not counted") {
        const auto r = class_iou(map_of(2, 1, {0, 1}), map_of(2, 1, {0, 255}), t);
        CHECK(r.per_class[1].fp == 0);
        CHECK_FALSE(r.per_class[1].iou.has_value());
        CHECK(*r.mean == 1.0);
    }
    SUBCASE("absent-class policy") {
        const auto m = map_of(2, 1, {0, 0});
        CHECK(*class_iou(m, m, t, AbsentClassPolicy::exclude).mean == 1.0);
        CHECK(*class_iou(m, m, t, AbsentClassPolicy::zero).mean == 0.25);
    }
    SUBCASE("no present class") { CHECK_FALSE(class_iou(LabelMap(2, 2), LabelMap(2, 2), t).mean.has_value()); }
    SUBCASE("size mismatch") { CHECK_URSA_ERROR(class_iou(LabelMap(2, 2), LabelMap(2, 3), t), ErrorCode::dimension_mismatch); }
    SUBCASE("report document") {
        const auto m = map_of(2, 1, {0, 2});
        const auto doc = nlohmann::json::parse(iou_report_json(class_iou(m, m, t), t));
        CHECK(doc["mean_iou"] == 1.0);
    }
}

TEST_CASE("class IOU properties") {
    Rng rng(77);
    const auto t = numbered(6);
    for (int i = 0; i < 200; ++i) {
        const auto pred = random_map(rng, 10, 6, 0.0);
        const auto gt = random_map(rng, 10, 6, 0.0);
        const auto r = class_iou(pred, gt, t);

        // Mean is the plain average of the present entries.
        double sum = 0.0;
        int present = 0;
        for (const auto& c : r.per_class) {
            if (c.iou) sum += *c.iou, ++present;
        }
        if (present) CHECK(*r.mean == doctest::Approx(sum / present).epsilon(1e-12));

        // Swapping roles keeps TP and swaps FP/FN.
        const auto s = class_iou(gt, pred, t);
        for (std::size_t c = 0; c < 6; ++c) {
            CHECK(s.per_class[c].tp == r.per_class[c].tp);
            CHECK(s.per_class[c].fp == r.per_class[c].fn);
            CHECK(s.per_class[c].iou == r.per_class[c].iou);
        }

        // The same pixel shuffle applied to both maps changes nothing.
        std::vector<std::size_t> perm(pred.pixels.size());
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t j = perm.size(); j > 1; --j) std::swap(perm[j - 1], perm[rng.below(j)]);
        LabelMap p2(10, 10), g2(10, 10);
        for (std::size_t j = 0; j < perm.size(); ++j) {
            p2.pixels[j] = pred.pixels[perm[j]];
            g2.pixels[j] = gt.pixels[perm[j]];
        }
        const auto q = class_iou(p2, g2, t);
        for (std::size_t c = 0; c < 6; ++c) CHECK(q.per_class[c].iou == r.per_class[c].iou);

        // Under an injective remap, scores move with their classes.
        std::vector<int> target{0, 1, 2, 3, 4, 5, 6, 7};
        for (std::size_t j = target.size(); j > 1; --j) std::swap(target[j - 1], target[rng.below(j)]);
        std::map<ClassId, std::optional<ClassId>> entries;
        for (int c = 0; c < 6; ++c) entries[static_cast<ClassId>(c)] = static_cast<ClassId>(target[c]);
        const RemapTable table(entries);
        const auto wide = numbered(8);
        const auto remapped = class_iou(remap_label_map(pred, table), remap_label_map(gt, table), wide);
        for (int c = 0; c < 6; ++c) CHECK(remapped.per_class[target[c]].iou == r.per_class[c].iou);
        CHECK(*remapped.mean == doctest::Approx(*r.mean).epsilon(1e-12));
    }
}
