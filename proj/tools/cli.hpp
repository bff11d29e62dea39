#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace psyprobe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBackend = 3;

/// Runs one command line (without the program name) and returns the exit
/// code. Subcommands: probe, corpus, alter, compare, train-lm, rerun.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psyprobe::cli
