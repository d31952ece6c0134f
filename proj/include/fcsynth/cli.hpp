#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fcsynth::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kSynthesisFailed = 3,
  kValidationFailed = 4,
};

/// Runs one command line (args exclude the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fcsynth::cli
