#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ursa/fmss.hpp"

namespace ursa::compositor {

using ClassId = std::uint8_t;
inline constexpr ClassId kUnlabeled = 255;

/// One FMSS's per-pixel influence, row-major, values in [0, 1].
struct ContributionLayer {
    FmssId fmss;
    std::vector<float> weights;
};

struct ContributionStack {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<ContributionLayer> layers;

    /// Throws dimension_mismatch / invalid_argument.
    void validate() const;
};

struct LabelMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<ClassId> pixels;  // row-major

    LabelMap() = default;
    LabelMap(std::size_t w, std::size_t h, ClassId fill = kUnlabeled) : width(w), height(h), pixels(w * h, fill) {}

    ClassId at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
    ClassId& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    bool operator==(const LabelMap&) const = default;
};

/// FMSS -> class; identifiers without an entry resolve to kUnlabeled.
using FmssLabeling = std::map<FmssId, ClassId>;

/// Each pixel takes the class of its most influential layer. Equal weights go
/// to the smaller FmssId; pixels with no positive weight stay unlabeled.
LabelMap assign_pixels(const ContributionStack& stack, const FmssLabeling& labeling);

using Rgb = std::array<std::uint8_t, 3>;

struct PaletteEntry {
    ClassId id;
    std::string name;
    Rgb color;
};

class Palette {
public:
    Palette() = default;
    explicit Palette(std::vector<PaletteEntry> entries);

    const std::vector<PaletteEntry>& entries() const { return entries_; }
    bool contains(ClassId id) const { return by_id_.contains(id); }
    Rgb color(ClassId id) const;
    /// True when no two classes share a color (required for decoding).
    bool injective() const { return injective_; }
    std::optional<ClassId> lookup(Rgb color) const;

private:
    std::vector<PaletteEntry> entries_;
    std::map<ClassId, Rgb> by_id_;
    std::map<Rgb, ClassId> by_color_;
    bool injective_ = true;
};

/// CSV with header "class_id,name,r,g,b".
Palette parse_palette_csv(std::string_view text);

/// Binary PPM (P6, maxval 255).
std::vector<std::uint8_t> encode_label_map(const LabelMap& map, const Palette& palette);
LabelMap decode_label_map(std::span<const std::uint8_t> bytes, const Palette& palette);

/// Stack container: "URSASTK1\n", 8-byte big-endian JSON header length, the
/// JSON header {"width","height","layers":[fmss...]}, then each layer's
/// weights as little-endian float32 in header order.
std::vector<std::uint8_t> write_stack(const ContributionStack& stack);
ContributionStack read_stack(std::span<const std::uint8_t> bytes);

/// Labeling JSON: {"labels":[{"fmss":{...},"class_id":int}]}
std::string serialize_labeling(const FmssLabeling& labeling);
FmssLabeling parse_labeling(std::string_view source);

}  // namespace ursa::compositor
