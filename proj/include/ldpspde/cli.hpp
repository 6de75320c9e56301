#pragma once

namespace ldp {

inline constexpr const char* kVersion = "0.1.0";

/// ldpspde <simulate|skeleton|rate|verify-ldp|verify-convergence|check-conditions> [flags]
///
/// Exit codes: 0 success, 2 validation error (bad flags, config or model), 3 numerical failure.
/// Outputs are written only after the whole pipeline succeeded.
int cli_main(int argc, char** argv);

}  // namespace ldp
