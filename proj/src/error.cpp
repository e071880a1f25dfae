#include "ursa/error.hpp"

namespace ursa {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::duplicate_id: return "duplicate_id";
        case ErrorCode::dangling_endpoint: return "dangling_endpoint";
        case ErrorCode::invalid_edge: return "invalid_edge";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::unknown_vertex: return "unknown_vertex";
        case ErrorCode::no_eligible_vertices: return "no_eligible_vertices";
        case ErrorCode::plan_mismatch: return "plan_mismatch";
        case ErrorCode::guard_exceeded: return "guard_exceeded";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::missing_palette_entry: return "missing_palette_entry";
        case ErrorCode::malformed_header: return "malformed_header";
        case ErrorCode::unknown_color: return "unknown_color";
        case ErrorCode::duplicate_entry: return "duplicate_entry";
        case ErrorCode::id_gap: return "id_gap";
        case ErrorCode::unmapped_id: return "unmapped_id";
        case ErrorCode::invalid_class: return "invalid_class";
        case ErrorCode::no_eligible_ballots: return "no_eligible_ballots";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

namespace {

std::string compose(const std::string& message, const std::string& where) {
    if (where.empty()) return message;
    return message + " (at " + where + ")";
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string where)
    : std::runtime_error(compose(message, where)), code_(code), where_(std::move(where)) {}

}  // namespace ursa
