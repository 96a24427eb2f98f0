#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace keydyn::cli {

// Parses `args` (args[0] is the program name) and runs one subcommand.
// Returns the process exit code: 0 on success, the ErrorCode value of any
// library error, 1 for unexpected failures, CLI11's code for usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace keydyn::cli
