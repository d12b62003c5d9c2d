#pragma once

#include <iosfwd>

namespace ocugaze::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitDevice = 4;

/// Parses argv and runs one subcommand (record, train, eval, predict,
/// serve, synth). Returns the process exit code; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ocugaze::cli
