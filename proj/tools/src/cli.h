#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rainforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one CLI invocation; args excludes the program name. JSON results go
// to out, diagnostics and help to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rainforge::cli
