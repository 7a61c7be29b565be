#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace harbench {

/// Entry point for the `harbench` tool: prepare | run | report | gradcheck.
/// `args` excludes the program name. Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace harbench
