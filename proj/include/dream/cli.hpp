#pragma once

#include <iosfwd>

namespace dream::cli {

/// Exit codes: 0 success, 1 runtime or input errors, 2 usage or config errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point shared by the `dream` binary and in-process tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dream::cli
