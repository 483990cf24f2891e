#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace trobench::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kDomainFailure = 1, kUsageError = 2 };

/// Parses `args` (without the program name) and runs one subcommand. Regular
/// output goes to `out`; warnings and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trobench::cli
