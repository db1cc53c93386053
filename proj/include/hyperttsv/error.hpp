#pragma once

#include <stdexcept>
#include <string>

namespace hyperttsv {

enum class Errc {
  malformed_line,
  empty_edge,
  zero_vertex_id,
  rank_exceeds_vertices,
  overflow,
  order_too_large,
  order_mismatch,
  forest_mismatch,
  dimension_mismatch,
  oracle_too_large,
  disconnected,
  isolated_vertex,
  non_positive_vector,
  invalid_argument,
  io,
  format,
  timeout,
  cancelled,
};

constexpr const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_line: return "MalformedLine";
    case Errc::empty_edge: return "EmptyEdge";
    case Errc::zero_vertex_id: return "ZeroVertexId";
    case Errc::rank_exceeds_vertices: return "RankExceedsVertices";
    case Errc::overflow: return "Overflow";
    case Errc::order_too_large: return "OrderTooLarge";
    case Errc::order_mismatch: return "OrderMismatch";
    case Errc::forest_mismatch: return "ForestMismatch";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::oracle_too_large: return "OracleTooLarge";
    case Errc::disconnected: return "Disconnected";
    case Errc::isolated_vertex: return "IsolatedVertex";
    case Errc::non_positive_vector: return "NonPositiveVector";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::io: return "IoError";
    case Errc::format: return "FormatError";
    case Errc::timeout: return "Timeout";
    case Errc::cancelled: return "Cancelled";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hyperttsv
