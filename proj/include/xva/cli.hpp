#pragma once

#include <iosfwd>

namespace xva::cli {

/// Exit codes: 0 success, 2 invalid input, 3 solver failure.
inline constexpr int exit_ok = 0;
inline constexpr int exit_invalid = 2;
inline constexpr int exit_solver = 3;

/// Entry point of the `xva` executable; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace xva::cli
