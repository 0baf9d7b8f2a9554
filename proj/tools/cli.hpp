#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hessvessel::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUserError = 2,
  kFormatError = 3,
  kNumericError = 4,
};

/// Runs the command line `args` (args[0] is the program name). Normal output
/// goes to `out`; failures print one "error:<kind>: <message>" line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hessvessel::cli
