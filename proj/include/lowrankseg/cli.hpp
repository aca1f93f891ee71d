#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lowrankseg::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 1,
  kExitNotConverged = 2,
};

/// Runs the command line `args` (args[0] is the program name). Records go to
/// `out` unless --out is given; diagnostics and usage go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Inclusive `start:step:end` grid, a comma-separated list, or a single value.
std::vector<double> parse_grid(std::string_view spec);

std::vector<int> parse_int_list(std::string_view spec);

/// Repetition-level worker count from LOWRANKSEG_THREADS (default 1).
unsigned worker_threads();

}  // namespace lowrankseg::cli
