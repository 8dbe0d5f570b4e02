#pragma once

namespace mlat {

/// Exit codes: 0 success, 2 validation error (including bad flags), 3 convergence or stability failure.
int run_cli(int argc, char** argv);

}  // namespace mlat
