#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kdvlab::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kConfig = 3,
  kIo = 4,
  kNumerical = 5,
};

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`; failures print one JSON object {"error": {...}} to `err`.
int cli_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_entry(int argc, char** argv);

}  // namespace kdvlab::cli
