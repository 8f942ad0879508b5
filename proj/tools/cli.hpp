#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rmab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;

/// Runs one command line (without the program name). Returns the exit code:
/// 0 on success, 1 on usage or I/O errors, 2 when a schedule is infeasible.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rmab::cli
