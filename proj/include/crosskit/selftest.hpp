#pragma once

#include <ostream>
#include <string>

namespace crosskit {

struct AcceptanceOptions {
  std::string cli_path;  // built CLI binary, exercised by the determinism check
  int threads = 4;
};

// Full acceptance sweep over the library: cross-validation against the
// independent oracles, invariants of the dressing algebra, convergence of the
// continuum discretization, the time-domain comparison and the frozen golden
// scenario. Prints one PASS/FAIL line per criterion and returns the number of
// failures.
int run_acceptance(const AcceptanceOptions& opts, std::ostream& out);

}  // namespace crosskit
