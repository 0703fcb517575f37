#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dwe {

enum class ErrorKind {
  // text interchange format
  malformed_header,
  malformed_record,
  count_mismatch,
  dim_mismatch,
  duplicate_token,
  invalid_token,
  non_finite,
  // native binary formats
  bad_magic,
  unsupported_version,
  truncated,
  // general
  io,
  shape_mismatch,
  epoch_mismatch,
  precondition,
  numerical_failure,
  missing_reference_epoch,
  alignment_impossible,
  out_of_vocabulary,
  zero_query,
  invalid_plan,
};

/// Stable kebab-case name, used in "error: <kind>: <detail>" lines.
std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. what() is "<kind>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string detail);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Parse failure in a line-oriented format; line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, std::size_t line, std::string detail);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dwe
