#pragma once

// Batch front end: `qhydro <eigenstate|uncertainty|simulate|evolve> [flags]`.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
// failure, 3 an uncertainty bound or the quantisation check was violated.

#include <ostream>

namespace qhydro {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitViolation = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qhydro
