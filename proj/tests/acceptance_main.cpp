#include <cstdlib>
#include <iostream>

#include "crosskit/selftest.hpp"

int main() {
  crosskit::AcceptanceOptions opts;
  opts.cli_path = CROSSKIT_CLI_PATH;
  opts.threads = 4;
  if (const char* env = std::getenv("CROSSKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) opts.threads = n;
  }
  const int failures = crosskit::run_acceptance(opts, std::cout);
  if (failures > 0) std::cout << failures << " criteria failed\n";
  return failures == 0 ? 0 : 1;
}
