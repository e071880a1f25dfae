#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "json.hpp"

namespace ursa {

/// Identifier of one texture-bearing asset section: drawable file, model name,
/// shader index and sampler index. Ordered lexicographically over the four
/// fields in that order.
struct FmssId {
    std::string file;
    std::string model;
    std::int32_t shader = 0;
    std::int32_t sampler = 0;

    auto operator<=>(const FmssId&) const = default;
    bool operator==(const FmssId&) const = default;
};

std::string to_string(const FmssId& id);

void to_json(nlohmann::json& j, const FmssId& id);
void from_json(const nlohmann::json& j, FmssId& id);

}  // namespace ursa

template <>
struct std::hash<ursa::FmssId> {
    std::size_t operator()(const ursa::FmssId& id) const noexcept {
        std::size_t h = std::hash<std::string>{}(id.file);
        auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
        mix(std::hash<std::string>{}(id.model));
        mix(std::hash<std::int32_t>{}(id.shader));
        mix(std::hash<std::int32_t>{}(id.sampler));
        return h;
    }
};
