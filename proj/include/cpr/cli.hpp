#pragma once

#include <iosfwd>

namespace cpr::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// Entry point behind the `cpr` executable. Writes results to `out` and
/// diagnostics to `err`; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpr::cli
