#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ursa {

enum class ErrorCode {
    parse_error,
    duplicate_id,
    dangling_endpoint,
    invalid_edge,
    invalid_argument,
    unknown_vertex,
    no_eligible_vertices,
    plan_mismatch,
    guard_exceeded,
    dimension_mismatch,
    missing_palette_entry,
    malformed_header,
    unknown_color,
    duplicate_entry,
    id_gap,
    unmapped_id,
    invalid_class,
    no_eligible_ballots,
    io_error,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code and, where it makes sense, the
/// location of the offending input (a JSON path, CSV line, byte offset...).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string where = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& where() const noexcept { return where_; }

private:
    ErrorCode code_;
    std::string where_;
};

}  // namespace ursa
