#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gla::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line in-process. `args` excludes the program name.
/// Returns 0 on success, 1 on a domain error, 2 on a usage or config error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gla::cli
