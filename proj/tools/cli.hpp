#pragma once
// Command-line front end. Kept as a library so tests can drive it in-process.

#include <ostream>

#include "aidetect/errors.hpp"

namespace aidetect::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitProvider = 4;

int exit_code(ErrorCategory category);

// Runs one command; never throws. Machine-readable output goes to `out`,
// diagnostics to `err`.
int run(int argc, const char* const argv[], std::ostream& out, std::ostream& err);

}  // namespace aidetect::cli
