#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace dwe::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalFailure = 3,
};

/// Runs one invocation. args[0] is the program name. Errors go to `err` as a single
/// "error: <kind>: <detail>" line.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err, std::istream& in);

}  // namespace dwe::cli
