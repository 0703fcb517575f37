#include "dwe/error.hpp"

#include <utility>

namespace dwe {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::malformed_header: return "malformed-header";
    case ErrorKind::malformed_record: return "malformed-record";
    case ErrorKind::count_mismatch: return "count-mismatch";
    case ErrorKind::dim_mismatch: return "dim-mismatch";
    case ErrorKind::duplicate_token: return "duplicate-token";
    case ErrorKind::invalid_token: return "invalid-token";
    case ErrorKind::non_finite: return "non-finite";
    case ErrorKind::bad_magic: return "bad-magic";
    case ErrorKind::unsupported_version: return "unsupported-version";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::io: return "io";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
    case ErrorKind::epoch_mismatch: return "epoch-mismatch";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::missing_reference_epoch: return "missing-reference-epoch";
    case ErrorKind::alignment_impossible: return "alignment-impossible";
    case ErrorKind::out_of_vocabulary: return "out-of-vocabulary";
    case ErrorKind::zero_query: return "zero-query";
    case ErrorKind::invalid_plan: return "invalid-plan";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
      kind_(kind),
      detail_(std::move(detail)) {}

ParseError::ParseError(ErrorKind kind, std::size_t line, std::string detail)
    : Error(kind, "line " + std::to_string(line) + ": " + detail), line_(line) {}

}  // namespace dwe
