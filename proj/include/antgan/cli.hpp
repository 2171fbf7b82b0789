// Command-line entry point, callable from tests. Returns the process exit
// code: 0 success, 1 validation/usage, 2 numeric divergence, 3 I/O.
#pragma once

#include <string>
#include <vector>

namespace antgan {

int run_cli(const std::vector<std::string>& args);

}  // namespace antgan
