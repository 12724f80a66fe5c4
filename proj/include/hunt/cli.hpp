#pragma once

#include <iosfwd>

namespace hunt {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitIo = 4 };

/// Entry point of the `hunt` tool. Failures print one JSON line
/// {"error": kind, "command": name, "message": text} to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace hunt
