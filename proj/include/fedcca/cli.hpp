#pragma once

#include <string>
#include <vector>

namespace fedcca {

// Entry point behind the fedcca binary; args exclude the program name.
// Returns the process exit code.
int run_cli(std::vector<std::string> args);

}  // namespace fedcca
