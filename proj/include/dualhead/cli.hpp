#pragma once

#include <ostream>

namespace dualhead {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitVerification = 3,
};

// Entry point of the `dualhead` tool: train, eval, predict, gradcheck, tokenize.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dualhead
