#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace reenact::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitUsage = 64;

/// Runs one command line (`args[0]` is the program name) and returns the
/// process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace reenact::cli
