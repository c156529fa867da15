#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace obstacle_ldp {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2 };

/// Entry point shared by the executable and the tests. `args` excludes the program name.
///   obstacle_ldp_cli <subcommand> --config PATH [--out DIR] [--jobs J] [--seed S] [--dry-run]
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
            std::ostream& err = std::cerr);

}  // namespace obstacle_ldp
