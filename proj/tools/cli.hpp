#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dmpa::cli {

/// Exit codes: 0 success, 1 domain error (instability, non-convergence, failed
/// validation), 2 usage or configuration error.
enum ExitCode : int { kSuccess = 0, kDomainError = 1, kUsageError = 2 };

/// Runs one subcommand. args excludes the program name. Data goes to --output
/// when given (summary on out), otherwise to out (summary on err).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmpa::cli
