#include "ursa/taxonomy.hpp"

#include <algorithm>
#include <set>

#include "csv.hpp"
#include "json.hpp"
#include "ursa/error.hpp"

namespace ursa::taxonomy {

using compositor::kUnlabeled;

ClassTaxonomy::ClassTaxonomy(std::vector<ClassEntry> classes) : classes_(std::move(classes)) {
    std::sort(classes_.begin(), classes_.end(), [](const auto& l, const auto& r) { return l.id < r.id; });
    std::set<std::string> names;
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        if (i > 0 && classes_[i].id == classes_[i - 1].id) {
            throw Error(ErrorCode::duplicate_entry, "duplicate class id " + std::to_string(classes_[i].id));
        }
        if (classes_[i].id != i) {
            throw Error(ErrorCode::id_gap, "class ids must run 0..n-1; missing " + std::to_string(i));
        }
        if (!names.insert(classes_[i].name).second) {
            throw Error(ErrorCode::duplicate_entry, "duplicate class name '" + classes_[i].name + "'");
        }
    }
}

const std::string& ClassTaxonomy::name(ClassId id) const {
    if (!contains(id)) throw Error(ErrorCode::invalid_class, "class id " + std::to_string(id) + " not in taxonomy");
    return classes_[id].name;
}

std::optional<ClassId> ClassTaxonomy::find(std::string_view name) const {
    for (const auto& c : classes_) {
        if (c.name == name) return c.id;
    }
    return std::nullopt;
}

ClassTaxonomy load_taxonomy(std::string_view csv) {
    std::vector<ClassEntry> classes;
    for (const auto& row : detail::read_csv(csv, "id,name")) {
        const std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != 2 || row.fields[1].empty()) {
            throw Error(ErrorCode::parse_error, "expected 'id,name'", where);
        }
        const int id = detail::parse_int<int>(row.fields[0], where);
        if (id < 0 || id >= kUnlabeled) throw Error(ErrorCode::invalid_class, "class id out of range", where);
        classes.push_back({static_cast<ClassId>(id), row.fields[1]});
    }
    return ClassTaxonomy(std::move(classes));
}

RemapTable RemapTable::identity(const ClassTaxonomy& t) {
    std::map<ClassId, std::optional<ClassId>> m;
    for (const auto& c : t.classes()) m[c.id] = c.id;
    return RemapTable(std::move(m));
}

std::optional<ClassId> RemapTable::apply(ClassId src) const {
    auto it = entries_.find(src);
    if (it == entries_.end()) throw Error(ErrorCode::unmapped_id, "class " + std::to_string(src) + " has no remap entry");
    return it->second;
}

void RemapTable::validate(const ClassTaxonomy& source, const ClassTaxonomy& target) const {
    for (const auto& c : source.classes()) {
        if (!covers(c.id)) throw Error(ErrorCode::unmapped_id, "remap table lacks source class '" + c.name + "'");
    }
    for (const auto& [src, dst] : entries_) {
        if (!source.contains(src)) {
            throw Error(ErrorCode::invalid_class, "remap source " + std::to_string(src) + " not in source taxonomy");
        }
        if (dst && !target.contains(*dst)) {
            throw Error(ErrorCode::invalid_class, "remap target " + std::to_string(*dst) + " not in target taxonomy");
        }
    }
}

RemapTable parse_remap_csv(std::string_view csv) {
    std::map<ClassId, std::optional<ClassId>> m;
    for (const auto& row : detail::read_csv(csv, "src_id,dst_id")) {
        const std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != 2) throw Error(ErrorCode::parse_error, "expected 'src_id,dst_id'", where);
        const auto src = detail::parse_int<ClassId>(row.fields[0], where);
        std::optional<ClassId> dst;
        if (row.fields[1] != "ignore") dst = detail::parse_int<ClassId>(row.fields[1], where);
        if (!m.emplace(src, dst).second) {
            throw Error(ErrorCode::duplicate_entry, "source class " + std::to_string(src) + " mapped twice", where);
        }
    }
    return RemapTable(std::move(m));
}

LabelMap remap_label_map(const LabelMap& map, const RemapTable& table) {
    LabelMap out(map.width, map.height);
    for (std::size_t i = 0; i < map.pixels.size(); ++i) {
        const ClassId src = map.pixels[i];
        if (src == kUnlabeled) continue;
        out.pixels[i] = table.apply(src).value_or(kUnlabeled);
    }
    return out;
}

IouReport class_iou(const LabelMap& pred, const LabelMap& gt, const ClassTaxonomy& t, AbsentClassPolicy policy) {
    if (pred.width != gt.width || pred.height != gt.height || pred.pixels.size() != gt.pixels.size()) {
        throw Error(ErrorCode::dimension_mismatch, "prediction and ground truth differ in size");
    }
    IouReport report;
    report.per_class.resize(t.size());
    for (std::size_t i = 0; i < gt.pixels.size(); ++i) {
        const ClassId g = gt.pixels[i];
        if (g == kUnlabeled) continue;
        const ClassId p = pred.pixels[i];
        if (p == g) {
            if (g < t.size()) ++report.per_class[g].tp;
            continue;
        }
        if (g < t.size()) ++report.per_class[g].fn;
        if (p < t.size()) ++report.per_class[p].fp;
    }

    double sum = 0.0;
    std::size_t counted = 0;
    for (auto& score : report.per_class) {
        const auto denom = score.tp + score.fp + score.fn;
        if (denom > 0) {
            score.iou = static_cast<double>(score.tp) / static_cast<double>(denom);
            sum += *score.iou;
            ++counted;
        } else if (policy == AbsentClassPolicy::zero) {
            ++counted;
        }
    }
    if (counted > 0) report.mean = sum / static_cast<double>(counted);
    return report;
}

std::string iou_report_json(const IouReport& report, const ClassTaxonomy& t) {
    nlohmann::json doc;
    doc["classes"] = nlohmann::json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const auto& s = report.per_class[c];
        nlohmann::json row{{"id", c}, {"name", t.name(static_cast<ClassId>(c))}, {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}};
        row["iou"] = s.iou ? nlohmann::json(*s.iou) : nlohmann::json(nullptr);
        doc["classes"].push_back(std::move(row));
    }
    doc["mean_iou"] = report.mean ? nlohmann::json(*report.mean) : nlohmann::json(nullptr);
    return doc.dump(2) + "\n";
}

}  // namespace ursa::taxonomy
