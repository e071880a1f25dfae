#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ursa/compositor.hpp"

namespace ursa::taxonomy {

using compositor::ClassId;
using compositor::LabelMap;

struct ClassEntry {
    ClassId id;
    std::string name;
};

/// Ordered class list with ids 0..n-1 and unique names.
class ClassTaxonomy {
public:
    ClassTaxonomy() = default;
    explicit ClassTaxonomy(std::vector<ClassEntry> classes);

    std::size_t size() const { return classes_.size(); }
    const std::vector<ClassEntry>& classes() const { return classes_; }
    bool contains(int id) const { return id >= 0 && static_cast<std::size_t>(id) < classes_.size(); }
    const std::string& name(ClassId id) const;
    std::optional<ClassId> find(std::string_view name) const;

private:
    std::vector<ClassEntry> classes_;  // sorted by id
};

/// CSV with header "id,name".
ClassTaxonomy load_taxonomy(std::string_view csv);

/// Source class -> target class, or nullopt for "ignore".
class RemapTable {
public:
    RemapTable() = default;
    explicit RemapTable(std::map<ClassId, std::optional<ClassId>> entries) : entries_(std::move(entries)) {}

    static RemapTable identity(const ClassTaxonomy& t);

    const std::map<ClassId, std::optional<ClassId>>& entries() const { return entries_; }
    bool covers(ClassId src) const { return entries_.contains(src); }
    /// Throws unmapped_id when src has no entry.
    std::optional<ClassId> apply(ClassId src) const;
    /// Checks totality over `source` and that targets exist in `target`.
    void validate(const ClassTaxonomy& source, const ClassTaxonomy& target) const;

private:
    std::map<ClassId, std::optional<ClassId>> entries_;
};

/// CSV with header "src_id,dst_id"; dst_id may be the word "ignore".
RemapTable parse_remap_csv(std::string_view csv);

/// Pointwise remap; ignored classes and unlabeled pixels become 255.
LabelMap remap_label_map(const LabelMap& map, const RemapTable& table);

struct ClassScore {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::optional<double> iou;  // absent when the class is in neither map
};

struct IouReport {
    std::vector<ClassScore> per_class;  // indexed by class id
    std::optional<double> mean;
};

enum class AbsentClassPolicy {
    exclude,  // classes seen in neither map are left out of the mean
    zero,     // ... or count as 0
};

/// Per-class TP / (TP + FP + FN). Pixels unlabeled in gt are not counted.
IouReport class_iou(const LabelMap& pred, const LabelMap& gt, const ClassTaxonomy& t,
                    AbsentClassPolicy policy = AbsentClassPolicy::exclude);

std::string iou_report_json(const IouReport& report, const ClassTaxonomy& t);

}  // namespace ursa::taxonomy
