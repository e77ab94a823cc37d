#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "crosskit/scenario.hpp"
#include "crosskit/selftest.hpp"
#include "crosskit/version.hpp"

namespace {

int default_threads() {
  if (const char* env = std::getenv("CROSSKIT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::string self_path(const char* argv0) {
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (n > 0) {
    buf[n] = '\0';
    return buf;
  }
  return argv0;
}

int cmd_run(const std::string& path, const std::string& out_dir, int threads) {
  const crosskit::Scenario sc = crosskit::load_scenario(path);
  return crosskit::run_scenario(sc, out_dir, threads, std::cout);
}

int cmd_validate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot read scenario file " << path << "\n";
    return 2;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::vector<std::string> problems =
      crosskit::validate_scenario_text(buf.str());
  for (const std::string& p : problems) std::cout << p << "\n";
  if (problems.empty()) {
    std::cout << "ok\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("crosskit ") + crosskit::kVersion +
               " - exact multichannel curve-crossing solver"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  int threads = default_threads();

  CLI::App* run = app.add_subcommand("run", "execute a scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory for the CSV files");
  run->add_option("--threads", threads, "worker threads");

  CLI::App* validate =
      app.add_subcommand("validate", "check a scenario file and report "
                                     "every schema problem");
  validate->add_option("scenario", scenario_path, "scenario JSON file")
      ->required();

  CLI::App* selftest =
      app.add_subcommand("selftest", "run the acceptance suite");
  selftest->add_option("--threads", threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, out_dir, threads);
    if (validate->parsed()) return cmd_validate(scenario_path);
    crosskit::AcceptanceOptions opts;
    opts.cli_path = self_path(argv[0]);
    opts.threads = threads;
    return crosskit::run_acceptance(opts, std::cout) == 0 ? 0 : 1;
  } catch (const crosskit::Error& err) {
    std::cerr << err.what() << "\n";
    return err.kind() == crosskit::ErrorKind::SchemaError ? 2 : 3;
  } catch (const std::exception& err) {
    std::cerr << err.what() << "\n";
    return 3;
  }
}
