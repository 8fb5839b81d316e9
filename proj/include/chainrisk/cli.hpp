#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace chainrisk {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 1;
inline constexpr int kExitConfig = 2;

/// Subcommands: solve, sweep, check, oracle. Returns the process exit code.
int cli_main(int argc, char** argv);
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Brute-force LCP and finite-difference verification on seeded random instances.
/// Prints one line per check; returns true when all pass.
bool run_oracle_suite(std::uint64_t seed, std::ostream& out, bool verbose = false);

}  // namespace chainrisk
