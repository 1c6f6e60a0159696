#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hoif {

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs the `hoifnet` command line (args excludes the program name).
/// Returns the process exit code: 0 on success, 1 on runtime errors, 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hoif
