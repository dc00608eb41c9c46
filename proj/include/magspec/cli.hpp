#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace magspec::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kCriterionNo = 2,
  kInconclusive = 3,
  kCertificationRefused = 4,
  kSolverFailure = 5,
};

// Runs one subcommand; args excludes the program name. Diagnostics go to err,
// summaries to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Inserts "--key=value" for every key of the JSON config file named by
// --config that is not already given on the command line. Arrays become
// comma-separated lists.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

} // namespace magspec::cli
