#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crosskit/continuum.hpp"
#include "crosskit/multichannel.hpp"
#include "crosskit/types.hpp"

namespace crosskit {

struct PacketSpec {
  double center = 0.0;
  double sigma = 1.0;
  double momentum = 0.0;
  std::vector<double> grid;
};

struct Command {
  std::string name;
  std::string output;
  std::vector<double> energies;
  std::vector<double> times;
  std::vector<double> frequencies;
  std::vector<double> values;  // sweep parameter values
  double position = 0.0;       // green probe point
  double eta = 1e-3;           // timedomain contour height
  double energy = 0.0;         // fixed energy of a strength sweep
  std::string parameter;       // sweep target: "strength" or "energy"
  PacketSpec packet;
};

struct Scenario {
  double mass = 1.0;
  GreenConvention convention = GreenConvention::Retarded;
  PotentialSpec driver = PotentialSpec::constant(0.0, 1.0);
  std::vector<ChannelSpec> channels;
  std::optional<ContinuumSystem> continuum;
  std::vector<Command> commands;
  double numeric_step = 0.01;  // grid step for sampled potentials
  std::uint64_t hash = 0;      // FNV-1a of the scenario file bytes
};

std::uint64_t fnv1a_hash(std::string_view bytes);

// Parse and fully check a scenario; diagnostics name the offending keys.
// parse_scenario throws SchemaError on the first problem,
// validate_scenario_text collects every problem it can find.
Scenario parse_scenario_text(const std::string& text);
std::vector<std::string> validate_scenario_text(const std::string& text);

Scenario load_scenario(const std::string& path);

MultiChannelSystem scenario_system(const Scenario& sc);

// Execute every command, one CSV per command under out_dir.
// Returns 0, or 3 when a validate command finds a failing check.
int run_scenario(const Scenario& sc, const std::string& out_dir, int threads,
                 std::ostream& log);

}  // namespace crosskit
