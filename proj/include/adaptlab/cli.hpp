#pragma once

#include <string>
#include <vector>

namespace adaptlab {

// Runs the command line given argv-style arguments (program name excluded).
// Exit codes: 0 success, 1 usage/validation error, 2 verification failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace adaptlab
