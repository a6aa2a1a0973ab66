#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "planekit/error.hpp"

namespace planekit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitConfiguration = 3,
  kExitFormat = 4,
  kExitDomain = 5,  // also degenerate samples and decode failures
  kExitGeneration = 6,
};

int exit_code_for(ErrorKind kind);

// Runs one subcommand. `args` includes the program name. Results go to `out`,
// progress and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace planekit::cli
