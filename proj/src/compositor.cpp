#include "ursa/compositor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "csv.hpp"
#include "json.hpp"
#include "ursa/error.hpp"

namespace ursa::compositor {

using nlohmann::json;

void ContributionStack::validate() const {
    const std::size_t n = width * height;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        const std::string where = "layers[" + std::to_string(i) + "]";
        if (layer.weights.size() != n) {
            throw Error(ErrorCode::dimension_mismatch,
                        "layer has " + std::to_string(layer.weights.size()) + " weights, expected " +
                            std::to_string(width) + "x" + std::to_string(height),
                        where);
        }
        for (float w : layer.weights) {
            if (!std::isfinite(w) || w < 0.0f || w > 1.0f) {
                throw Error(ErrorCode::invalid_argument, "weights must be finite and in [0, 1]", where);
            }
        }
    }
}

LabelMap assign_pixels(const ContributionStack& stack, const FmssLabeling& labeling) {
    stack.validate();
    LabelMap out(stack.width, stack.height, kUnlabeled);

    // Visiting layers in FmssId order and keeping only strict improvements
    // makes the smallest identifier win every tie.
    std::vector<std::size_t> order(stack.layers.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return stack.layers[l].fmss < stack.layers[r].fmss; });

    std::vector<ClassId> layer_class;
    layer_class.reserve(order.size());
    for (std::size_t li : order) {
        auto it = labeling.find(stack.layers[li].fmss);
        layer_class.push_back(it == labeling.end() ? kUnlabeled : it->second);
    }

    for (std::size_t p = 0; p < out.pixels.size(); ++p) {
        float best = 0.0f;
        ClassId cls = kUnlabeled;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const float w = stack.layers[order[k]].weights[p];
            if (w > best) {
                best = w;
                cls = layer_class[k];
            }
        }
        out.pixels[p] = cls;
    }
    return out;
}

Palette::Palette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (!by_id_.emplace(e.id, e.color).second) {
            throw Error(ErrorCode::duplicate_entry, "palette lists class " + std::to_string(e.id) + " twice");
        }
        if (!by_color_.emplace(e.color, e.id).second) injective_ = false;
    }
}

Rgb Palette::color(ClassId id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
        throw Error(ErrorCode::missing_palette_entry, "class " + std::to_string(id) + " has no palette color");
    }
    return it->second;
}

std::optional<ClassId> Palette::lookup(Rgb color) const {
    auto it = by_color_.find(color);
    if (it == by_color_.end()) return std::nullopt;
    return it->second;
}

Palette parse_palette_csv(std::string_view text) {
    std::vector<PaletteEntry> entries;
    for (const auto& row : detail::read_csv(text, "class_id,name,r,g,b")) {
        const std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != 5) throw Error(ErrorCode::parse_error, "expected 5 fields", where);
        PaletteEntry e;
        e.id = detail::parse_int<std::uint8_t>(row.fields[0], where);
        e.name = row.fields[1];
        for (int c = 0; c < 3; ++c) e.color[c] = detail::parse_int<std::uint8_t>(row.fields[2 + c], where);
        entries.push_back(std::move(e));
    }
    return Palette(std::move(entries));
}

std::vector<std::uint8_t> encode_label_map(const LabelMap& map, const Palette& palette) {
    if (map.pixels.size() != map.width * map.height) {
        throw Error(ErrorCode::dimension_mismatch, "label map size does not match its dimensions");
    }
    const std::string header = "P6\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + map.pixels.size() * 3);
    for (ClassId id : map.pixels) {
        const Rgb c = palette.color(id);
        out.insert(out.end(), c.begin(), c.end());
    }
    return out;
}

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string next_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') tok.push_back(static_cast<char>(bytes[pos++]));
    return tok;
}

std::size_t header_number(const std::string& tok, const char* what) {
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        tok.size() > 9) {
        throw Error(ErrorCode::malformed_header, std::string("bad PPM ") + what + " '" + tok + "'");
    }
    return std::stoul(tok);
}

}  // namespace

LabelMap decode_label_map(std::span<const std::uint8_t> bytes, const Palette& palette) {
    if (!palette.injective()) {
        throw Error(ErrorCode::invalid_argument, "decoding needs a palette with distinct colors");
    }
    std::size_t pos = 0;
    if (next_token(bytes, pos) != "P6") throw Error(ErrorCode::malformed_header, "not a binary PPM (P6)");
    const std::size_t width = header_number(next_token(bytes, pos), "width");
    const std::size_t height = header_number(next_token(bytes, pos), "height");
    const std::size_t maxval = header_number(next_token(bytes, pos), "maxval");
    if (maxval != 255) throw Error(ErrorCode::malformed_header, "maxval must be 255, got " + std::to_string(maxval));
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw Error(ErrorCode::malformed_header, "missing whitespace after maxval");
    }
    ++pos;
    const std::size_t expected = width * height * 3;
    if (bytes.size() - pos != expected) {
        throw Error(ErrorCode::malformed_header, "pixel payload is " + std::to_string(bytes.size() - pos) +
                                                     " bytes, expected " + std::to_string(expected));
    }
    LabelMap out(width, height);
    for (std::size_t i = 0; i < width * height; ++i) {
        const Rgb c{bytes[pos + 3 * i], bytes[pos + 3 * i + 1], bytes[pos + 3 * i + 2]};
        const auto id = palette.lookup(c);
        if (!id) {
            throw Error(ErrorCode::unknown_color,
                        "color (" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]) +
                            ") is not in the palette",
                        "pixel " + std::to_string(i % width) + "," + std::to_string(i / width));
        }
        out.pixels[i] = *id;
    }
    return out;
}

namespace {

constexpr std::string_view kStackMagic = "URSASTK1\n";

json fmss_json(const FmssId& id) {
    json j;
    to_json(j, id);
    return j;
}

}  // namespace

std::vector<std::uint8_t> write_stack(const ContributionStack& stack) {
    stack.validate();
    json header{{"width", stack.width}, {"height", stack.height}, {"layers", json::array()}};
    for (const auto& layer : stack.layers) header["layers"].push_back(fmss_json(layer.fmss));
    const std::string text = header.dump();

    std::vector<std::uint8_t> out(kStackMagic.begin(), kStackMagic.end());
    const std::uint64_t len = text.size();
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& layer : stack.layers) {
        for (float w : layer.weights) {
            const auto bits = std::bit_cast<std::uint32_t>(w);
            for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(bits >> shift));
        }
    }
    return out;
}

ContributionStack read_stack(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kStackMagic.size() + 8 ||
        std::memcmp(bytes.data(), kStackMagic.data(), kStackMagic.size()) != 0) {
        throw Error(ErrorCode::malformed_header, "missing URSASTK1 magic");
    }
    std::size_t pos = kStackMagic.size();
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len = (len << 8) | bytes[pos++];
    if (len > bytes.size() - pos) throw Error(ErrorCode::malformed_header, "header length exceeds file size");

    json header;
    try {
        header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                             bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::malformed_header, std::string("stack header: ") + e.what());
    }
    pos += len;

    ContributionStack stack;
    try {
        stack.width = header.at("width").get<std::size_t>();
        stack.height = header.at("height").get<std::size_t>();
        for (const auto& j : header.at("layers")) stack.layers.push_back({j.get<FmssId>(), {}});
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_header, std::string("stack header: ") + e.what());
    }

    const std::size_t n = stack.width * stack.height;
    if (bytes.size() - pos != stack.layers.size() * n * 4) {
        throw Error(ErrorCode::dimension_mismatch, "payload size does not match header dimensions");
    }
    for (auto& layer : stack.layers) {
        layer.weights.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b) bits |= std::uint32_t{bytes[pos++]} << (8 * b);
            layer.weights[i] = std::bit_cast<float>(bits);
        }
    }
    stack.validate();
    return stack;
}

std::string serialize_labeling(const FmssLabeling& labeling) {
    json doc{{"labels", json::array()}};
    for (const auto& [id, cls] : labeling) doc["labels"].push_back({{"fmss", fmss_json(id)}, {"class_id", cls}});
    return doc.dump(2) + "\n";
}

FmssLabeling parse_labeling(std::string_view source) {
    FmssLabeling out;
    try {
        const auto doc = json::parse(source);
        const auto& labels = doc.at("labels");
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto cls = labels[i].at("class_id").get<int>();
            if (cls < 0 || cls > 255) {
                throw Error(ErrorCode::invalid_class, "class id out of range", "$.labels[" + std::to_string(i) + "]");
            }
            out[labels[i].at("fmss").get<FmssId>()] = static_cast<ClassId>(cls);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, e.what());
    }
    return out;
}

}  // namespace ursa::compositor
