#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ursa::io {

/// Whole-file helpers; failures throw ursa::Error(io_error).
std::string read_text(const std::filesystem::path& path);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Directory holding the shipped taxonomy, palette, remap and curve files:
/// $URSA_DATA_DIR when set, else the location recorded at build time.
std::filesystem::path data_dir();

}  // namespace ursa::io
