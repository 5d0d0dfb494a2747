#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eqforge::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // numerical failure not covered below
  kIoOrConfig = 2,
  kEmptyModel = 3,
  kUnsupportedForm = 4,
};

/// Runs the command line; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace eqforge::cli
