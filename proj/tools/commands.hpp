#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lconf::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,      // bad flags, malformed config
  kData = 3,       // unreadable or malformed input data
  kNumerical = 4,  // non-convergence, degenerate graph
};

// Runs one `lconf` invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lconf::cli
