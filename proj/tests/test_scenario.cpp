#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crosskit/scenario.hpp"
#include "crosskit/two_state.hpp"

using namespace crosskit;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* tag) {
  static int counter = 0;
  const fs::path p = fs::temp_directory_path() /
                     ("crosskit-test-" + std::to_string(getpid()) + "-" +
                      tag + "-" + std::to_string(counter++));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

bool any_mentions(const std::vector<std::string>& problems,
                  const std::string& needle) {
  for (const std::string& p : problems)
    if (p.find(needle) != std::string::npos) return true;
  return false;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string("'") + CROSSKIT_CLI_PATH + "' " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

constexpr char kGreenScenario[] = R"({
  "driver": {"kind": "constant", "v0": 0.0},
  "commands": [
    {"name": "green", "output": "g.csv", "position": 0.0,
     "energies": [0.5, 2.0, 4.5]}
  ]
})";

constexpr char kSolveScenario[] = R"({
  "mass": 1.0,
  "channels": [
    {"potential": {"kind": "constant", "v0": 1.0}, "strength": 0.8,
     "point": 0.0}
  ],
  "commands": [
    {"name": "solve2", "output": "s.csv",
     "energies": {"from": 0.1, "to": 0.9, "count": 17}},
    {"name": "sweep", "output": "w.csv", "parameter": "strength",
     "energy": 0.5, "values": [0.5, 1.0, 1.5]},
    {"name": "validate", "output": "v.csv",
     "energies": {"from": 0.1, "to": 2.0, "count": 5}}
  ]
})";

}  // namespace

TEST_CASE("fnv1a matches the reference vectors") {
  CHECK(fnv1a_hash("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a_hash("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a_hash("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("scenario defaults and schema diagnostics") {
  const Scenario sc = parse_scenario_text(R"({"commands": []})");
  CHECK(sc.mass == 1.0);
  CHECK(sc.convention == GreenConvention::Retarded);
  CHECK(sc.driver.kind == PotentialKind::Constant);
  CHECK(sc.channels.empty());
  CHECK_FALSE(sc.continuum.has_value());

  CHECK(any_mentions(validate_scenario_text(R"({"masss": 1})"),
                     "scenario.masss"));
  CHECK(any_mentions(validate_scenario_text(R"({"commands": 3})"),
                     "scenario.commands"));
  CHECK(any_mentions(validate_scenario_text("{nope"), "json"));

  const std::string conflict = R"({
    "channels": [{"potential": {"kind": "constant", "v0": 1.0},
                  "strength": 0.5, "point": 0.0}],
    "continuum": {"kernel": "exponential", "amplitude": 0.3,
                  "attach_point": 0.0},
    "commands": []
  })";
  CHECK(any_mentions(validate_scenario_text(conflict), "alternatives"));

  const std::string bad_sweep = R"({
    "channels": [
      {"potential": {"kind": "constant", "v0": 1.0}, "strength": 0.5,
       "point": 0.0},
      {"potential": {"kind": "constant", "v0": 2.0}, "strength": 0.5,
       "point": 1.0}
    ],
    "commands": [{"name": "sweep", "output": "x.csv",
                  "parameter": "strength", "energy": 0.5, "values": [1.0]}]
  })";
  CHECK(any_mentions(validate_scenario_text(bad_sweep), "exactly one"));

  const std::string bad_grid = R"({
    "commands": [{"name": "green", "output": "x.csv",
                  "energies": {"from": 2.0, "to": 1.0, "count": 5}}]
  })";
  CHECK(any_mentions(validate_scenario_text(bad_grid), "energies"));

  CHECK_THROWS_AS(parse_scenario_text(R"({"mass": -1, "commands": []})"),
                  Error);
}

TEST_CASE("green command writes a hashed csv") {
  const fs::path dir = fresh_dir("green");
  std::ostringstream log;
  const Scenario sc = parse_scenario_text(kGreenScenario);
  CHECK(run_scenario(sc, dir.string(), 2, log) == 0);

  const std::string text = slurp(dir / "g.csv");
  const auto lines = lines_of(text);
  REQUIRE(lines.size() == 5);
  char expect[128];
  std::snprintf(expect, sizeof expect, "# crosskit 0.1.0 scenario %016llx",
                static_cast<unsigned long long>(sc.hash));
  CHECK(lines[0] == expect);
  CHECK(lines[1] == "energy,re_g,im_g");

  // G(0,0) = -i/k at v0 = 0, so at E = 0.5 the row is (0.5, 0, -1)
  double e = 0.0, re = 0.0, im = 0.0;
  REQUIRE(std::sscanf(lines[2].c_str(), "%lf,%lf,%lf", &e, &re, &im) == 3);
  CHECK(e == 0.5);
  CHECK(re == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(im == doctest::Approx(-1.0).epsilon(1e-14));
  fs::remove_all(dir);
}

TEST_CASE("solve2, sweep and validate commands run end to end") {
  const fs::path dir = fresh_dir("solve");
  std::ostringstream log;
  const Scenario sc = parse_scenario_text(kSolveScenario);
  CHECK(run_scenario(sc, dir.string(), 2, log) == 0);

  const auto solve_lines = lines_of(slurp(dir / "s.csv"));
  REQUIRE(solve_lines.size() == 2 + 17);
  CHECK(solve_lines[1] == "energy,R,T,transfer,flux,abs_denominator");
  double e, r, t, tr, fx, ad;
  REQUIRE(std::sscanf(solve_lines[2].c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &e,
                      &r, &t, &tr, &fx, &ad) == 6);
  CHECK(fx == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tr == 0.0);  // second channel closed below v0 = 1

  const auto sweep_lines = lines_of(slurp(dir / "w.csv"));
  REQUIRE(sweep_lines.size() == 2 + 3);
  // the middle sweep value scales the base strength by 1, matching solve2
  TwoChannelSystem two;
  two.channel1 = PotentialSpec::constant(0.0, 1.0);
  two.channel2 = PotentialSpec::constant(1.0, 1.0);
  two.coupling = {0.8, 0.0};
  const ScatterResult ref = scatter_two(0.5, two);
  double v;
  REQUIRE(std::sscanf(sweep_lines[3].c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &v,
                      &r, &t, &tr, &fx, &ad) == 6);
  CHECK(v == 1.0);
  CHECK(r == doctest::Approx(ref.R).epsilon(1e-13));
  CHECK(t == doctest::Approx(ref.T).epsilon(1e-13));

  const auto validate_lines = lines_of(slurp(dir / "v.csv"));
  CHECK(validate_lines[1] == "check,parameter,error,status");
  bool saw_two_route = false;
  for (const std::string& line : validate_lines) {
    if (line.rfind("two_route", 0) == 0) saw_two_route = true;
    CHECK(line.find(",fail") == std::string::npos);
  }
  CHECK(saw_two_route);
  fs::remove_all(dir);
}

TEST_CASE("scenario output is byte-identical across thread counts") {
  const fs::path d1 = fresh_dir("t1");
  const fs::path d4 = fresh_dir("t4");
  std::ostringstream log;
  const Scenario sc = parse_scenario_text(kSolveScenario);
  CHECK(run_scenario(sc, d1.string(), 1, log) == 0);
  CHECK(run_scenario(sc, d4.string(), 4, log) == 0);
  for (const char* name : {"s.csv", "w.csv", "v.csv"})
    CHECK(slurp(d1 / name) == slurp(d4 / name));
  fs::remove_all(d1);
  fs::remove_all(d4);
}

TEST_CASE("timedomain command writes survival rows") {
  const fs::path dir = fresh_dir("td");
  const std::string scenario = R"({
    "channels": [{"potential": {"kind": "constant", "v0": 0.5},
                  "strength": 0.4, "point": 0.0}],
    "commands": [{
      "name": "timedomain", "output": "td.csv", "eta": 0.004,
      "times": {"from": 0.0, "to": 2.0, "count": 5},
      "frequencies": {"from": -6.0, "to": 10.0, "count": 8001},
      "packet": {"center": -5.0, "sigma": 1.1, "momentum": 1.3,
                 "grid": {"from": -14.0, "to": 5.0, "count": 381}}
    }]
  })";
  std::ostringstream log;
  CHECK(run_scenario(parse_scenario_text(scenario), dir.string(), 2, log) ==
        0);
  const auto lines = lines_of(slurp(dir / "td.csv"));
  REQUIRE(lines.size() == 2 + 5);
  CHECK(lines[1] == "time,survival,re_amplitude,im_amplitude");
  double t, p, re, im;
  REQUIRE(std::sscanf(lines[2].c_str(), "%lf,%lf,%lf,%lf", &t, &p, &re,
                      &im) == 4);
  CHECK(t == 0.0);
  CHECK(p == doctest::Approx(1.0).epsilon(5e-2));
  fs::remove_all(dir);
}

TEST_CASE("cli exit codes distinguish schema and solver failures") {
  const fs::path dir = fresh_dir("cli");
  const fs::path good = dir / "good.json";
  const fs::path bad = dir / "bad.json";
  const fs::path solver = dir / "solver.json";
  spit(good, kGreenScenario);
  spit(bad, R"({"commands": [{"name": "green"}]})");
  // probing the kernel exactly at the branch point is a solver error
  spit(solver, R"({
    "commands": [{"name": "green", "output": "g.csv", "energies": [0.0]}]
  })");

  CHECK(run_cli("validate '" + good.string() + "'") == 0);
  CHECK(run_cli("validate '" + bad.string() + "'") == 2);
  CHECK(run_cli("run '" + bad.string() + "' --out '" + dir.string() + "'") ==
        2);
  CHECK(run_cli("run '" + good.string() + "' --out '" + dir.string() +
                "' --threads 2") == 0);
  CHECK(run_cli("run '" + solver.string() + "' --out '" + dir.string() +
                "'") == 3);
  CHECK(run_cli("run '" + (dir / "missing.json").string() + "'") == 2);
  fs::remove_all(dir);
}
