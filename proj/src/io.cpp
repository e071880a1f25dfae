#include "ursa/io.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>

#include "ursa/error.hpp"

#ifndef URSA_DEFAULT_DATA_DIR
#define URSA_DEFAULT_DATA_DIR "data"
#endif

namespace ursa::io {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    return {bytes.begin(), bytes.end()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("URSA_DATA_DIR"); env && *env) return env;
    return URSA_DEFAULT_DATA_DIR;
}

}  // namespace ursa::io
