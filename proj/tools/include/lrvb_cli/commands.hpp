#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lrvb::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Parses argv (argv[0] is the program name) and runs one subcommand.
/// Diagnostics go to `err`; human-readable summaries go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lrvb::cli
