#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loratdma::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitRuntime = 4;

// Entry point of the loratdma tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loratdma::cli
