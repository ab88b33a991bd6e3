#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace asmqa::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitIo = 4;

/// Parses `args` (without the program name) and runs one subcommand.
/// Failures are reported on `err` as a single JSON line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asmqa::cli
