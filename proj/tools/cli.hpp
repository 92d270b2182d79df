#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace zoomspec::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kInvariant = 3 };

// Runs one invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace zoomspec::cli
