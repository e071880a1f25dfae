#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ursa::cli {

/// Runs one `ursa` invocation; args exclude the program name. Returns the
/// process exit status (0 success, 1 usage error, 2 runtime failure).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ursa::cli
