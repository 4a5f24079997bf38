#pragma once

#include <iosfwd>

namespace urlsentry {

/// Exit codes of the urlsentry command.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// Entry point of the urlsentry command. Normal output goes to `out`;
/// diagnostics, progress and log lines go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace urlsentry
