#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace privkey {

enum ExitCode { kExitPass = 0, kExitCheckFailure = 1, kExitUsage = 2 };

// Runs the command-line interface; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace privkey
