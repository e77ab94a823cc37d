#include "crosskit/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "crosskit/errors.hpp"
#include "crosskit/oracle.hpp"
#include "crosskit/two_state.hpp"
#include "crosskit/util.hpp"
#include "crosskit/version.hpp"

namespace crosskit {

namespace {

constexpr char kModule[] = "scenario";

using nlohmann::json;

struct Diagnostics {
  std::vector<std::string> problems;

  void add(const std::string& path, const std::string& message) {
    problems.push_back(path + ": " + message);
  }
  bool ok() const { return problems.empty(); }
};

bool expect_keys(const json& obj, const std::string& path,
                 const std::set<std::string>& allowed, Diagnostics& diag) {
  bool good = true;
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) {
      diag.add(path + "." + key, "unknown key");
      good = false;
    }
  return good;
}

double number_or(const json& obj, const std::string& key,
                 const std::string& path, double fallback, Diagnostics& diag) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    diag.add(path + "." + key, "expected a number");
    return fallback;
  }
  return obj[key].get<double>();
}

std::vector<double> parse_grid(const json& spec, const std::string& path,
                               Diagnostics& diag) {
  std::vector<double> out;
  if (spec.is_array()) {
    for (const auto& v : spec) {
      if (!v.is_number()) {
        diag.add(path, "grid entries must be numbers");
        return {};
      }
      out.push_back(v.get<double>());
    }
    if (out.empty()) diag.add(path, "grid must not be empty");
    for (std::size_t i = 1; i < out.size(); ++i)
      if (!(out[i] > out[i - 1])) {
        diag.add(path, "grid must increase strictly");
        break;
      }
    return out;
  }
  if (!spec.is_object()) {
    diag.add(path, "expected an array of numbers or {from, to, count}");
    return {};
  }
  expect_keys(spec, path, {"from", "to", "count"}, diag);
  if (!spec.contains("from") || !spec.contains("to") ||
      !spec.contains("count")) {
    diag.add(path, "needs from, to and count");
    return {};
  }
  const double from = number_or(spec, "from", path, 0.0, diag);
  const double to = number_or(spec, "to", path, 0.0, diag);
  if (!spec["count"].is_number_unsigned() || spec["count"].get<double>() < 1) {
    diag.add(path + ".count", "expected a positive integer");
    return {};
  }
  const std::size_t count = spec["count"].get<std::size_t>();
  if (count == 1) return {from};
  if (!(to > from)) {
    diag.add(path, "needs from < to");
    return {};
  }
  return linspace(from, to, count);
}

PotentialSpec parse_potential(const json& spec, const std::string& path,
                              double mass, Diagnostics& diag) {
  const PotentialSpec fallback = PotentialSpec::constant(0.0, mass);
  if (!spec.is_object() || !spec.contains("kind") ||
      !spec["kind"].is_string()) {
    diag.add(path, "expected a potential object with a kind");
    return fallback;
  }
  const std::string kind = spec["kind"].get<std::string>();
  try {
    if (kind == "constant") {
      expect_keys(spec, path, {"kind", "v0"}, diag);
      return PotentialSpec::constant(number_or(spec, "v0", path, 0.0, diag),
                                     mass);
    }
    if (kind == "linear") {
      expect_keys(spec, path, {"kind", "v0", "slope"}, diag);
      return PotentialSpec::linear(number_or(spec, "v0", path, 0.0, diag),
                                   number_or(spec, "slope", path, 0.0, diag),
                                   mass);
    }
    if (kind == "sampled") {
      expect_keys(spec, path, {"kind", "samples"}, diag);
      if (!spec.contains("samples") || !spec["samples"].is_array()) {
        diag.add(path + ".samples", "expected an array of [x, v] pairs");
        return fallback;
      }
      std::vector<std::pair<double, double>> samples;
      for (const auto& row : spec["samples"]) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
            !row[1].is_number()) {
          diag.add(path + ".samples", "expected [x, v] number pairs");
          return fallback;
        }
        samples.emplace_back(row[0].get<double>(), row[1].get<double>());
      }
      return PotentialSpec::sampled(std::move(samples), mass);
    }
  } catch (const Error& err) {
    diag.add(path, err.what());
    return fallback;
  }
  diag.add(path + ".kind", "expected constant, linear or sampled");
  return fallback;
}

Complex parse_strength(const json& spec, const std::string& path,
                       Diagnostics& diag) {
  if (spec.is_number()) return Complex(spec.get<double>(), 0.0);
  if (spec.is_array() && spec.size() == 2 && spec[0].is_number() &&
      spec[1].is_number())
    return Complex(spec[0].get<double>(), spec[1].get<double>());
  diag.add(path, "expected a number or [re, im]");
  return Complex(0.0);
}

const std::set<std::string> kCommandNames = {
    "green", "solve2", "solven", "continuum", "timedomain", "validate",
    "sweep"};

Command parse_command(const json& spec, const std::string& path,
                      const Scenario& sc, Diagnostics& diag) {
  Command cmd;
  if (!spec.is_object() || !spec.contains("name") ||
      !spec["name"].is_string()) {
    diag.add(path, "expected a command object with a name");
    return cmd;
  }
  cmd.name = spec["name"].get<std::string>();
  if (!kCommandNames.count(cmd.name)) {
    diag.add(path + ".name", "unknown command " + cmd.name);
    return cmd;
  }
  if (!spec.contains("output") || !spec["output"].is_string() ||
      spec["output"].get<std::string>().empty()) {
    diag.add(path + ".output", "every command writes one CSV file");
  } else {
    cmd.output = spec["output"].get<std::string>();
  }

  auto grid_of = [&](const char* key, bool required) -> std::vector<double> {
    if (!spec.contains(key)) {
      if (required) diag.add(path + "." + key, "required for " + cmd.name);
      return {};
    }
    return parse_grid(spec[key], path + "." + key, diag);
  };

  std::set<std::string> allowed = {"name", "output"};
  if (cmd.name == "green") {
    allowed.insert({"energies", "position"});
    cmd.energies = grid_of("energies", true);
    cmd.position = number_or(spec, "position", path, 0.0, diag);
  } else if (cmd.name == "solve2" || cmd.name == "solven" ||
             cmd.name == "validate") {
    allowed.insert({"energies"});
    cmd.energies = grid_of("energies", true);
  } else if (cmd.name == "continuum") {
    allowed.insert({"energies"});
    cmd.energies = grid_of("energies", true);
    if (!sc.continuum)
      diag.add(path, "continuum command needs a continuum block");
  } else if (cmd.name == "timedomain") {
    allowed.insert({"times", "frequencies", "eta", "packet"});
    cmd.times = grid_of("times", true);
    cmd.frequencies = grid_of("frequencies", true);
    cmd.eta = number_or(spec, "eta", path, 1e-3, diag);
    if (!(cmd.eta > 0.0)) diag.add(path + ".eta", "must be positive");
    if (!spec.contains("packet") || !spec["packet"].is_object()) {
      diag.add(path + ".packet", "timedomain needs an initial packet");
    } else {
      const json& p = spec["packet"];
      const std::string ppath = path + ".packet";
      expect_keys(p, ppath, {"center", "sigma", "momentum", "grid"}, diag);
      cmd.packet.center = number_or(p, "center", ppath, 0.0, diag);
      cmd.packet.sigma = number_or(p, "sigma", ppath, 1.0, diag);
      cmd.packet.momentum = number_or(p, "momentum", ppath, 0.0, diag);
      if (!(cmd.packet.sigma > 0.0))
        diag.add(ppath + ".sigma", "must be positive");
      if (!p.contains("grid"))
        diag.add(ppath + ".grid", "required");
      else
        cmd.packet.grid = parse_grid(p["grid"], ppath + ".grid", diag);
    }
  } else if (cmd.name == "sweep") {
    allowed.insert({"parameter", "values", "energy"});
    cmd.values = grid_of("values", true);
    if (!spec.contains("parameter") || !spec["parameter"].is_string()) {
      diag.add(path + ".parameter", "expected \"strength\" or \"energy\"");
    } else {
      cmd.parameter = spec["parameter"].get<std::string>();
      if (cmd.parameter != "strength" && cmd.parameter != "energy")
        diag.add(path + ".parameter", "expected \"strength\" or \"energy\"");
    }
    if (cmd.parameter == "strength") {
      if (!spec.contains("energy"))
        diag.add(path + ".energy", "strength sweeps fix one energy");
      cmd.energy = number_or(spec, "energy", path, 0.0, diag);
    }
    if (sc.channels.size() != 1)
      diag.add(path, "sweep needs exactly one coupled channel");
  }
  expect_keys(spec, path, allowed, diag);

  const bool needs_channel = cmd.name == "solve2";
  if (needs_channel && sc.channels.empty())
    diag.add(path, cmd.name + " needs at least one coupled channel");
  if ((cmd.name == "solve2" || cmd.name == "solven" || cmd.name == "sweep"))
    for (std::size_t e = 0; e < sc.channels.size(); ++e)
      if (sc.channels[e].strength.imag() != 0.0)
        diag.add(path, "scattering commands need real coupling strengths");
  return cmd;
}

Scenario parse_impl(const std::string& text, Diagnostics& diag) {
  Scenario sc;
  sc.hash = fnv1a_hash(text);
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    diag.add("json", err.what());
    return sc;
  }
  if (!root.is_object()) {
    diag.add("json", "scenario root must be an object");
    return sc;
  }
  expect_keys(root, "scenario",
              {"mass", "convention", "driver", "channels", "continuum",
               "commands", "numeric_step"},
              diag);

  sc.mass = number_or(root, "mass", "scenario", 1.0, diag);
  if (!(sc.mass > 0.0)) diag.add("scenario.mass", "must be positive");

  sc.numeric_step = number_or(root, "numeric_step", "scenario", 0.01, diag);
  if (!(sc.numeric_step > 0.0)) {
    diag.add("scenario.numeric_step", "must be positive");
    sc.numeric_step = 0.01;
  }

  if (root.contains("convention")) {
    const json& conv = root["convention"];
    if (conv.is_string() && conv.get<std::string>() == "retarded")
      sc.convention = GreenConvention::Retarded;
    else if (conv.is_string() && conv.get<std::string>() == "principal")
      sc.convention = GreenConvention::Principal;
    else
      diag.add("scenario.convention",
               "expected \"retarded\" or \"principal\"");
  }

  if (root.contains("driver"))
    sc.driver = parse_potential(root["driver"], "scenario.driver", sc.mass,
                                diag);
  else
    sc.driver = PotentialSpec::constant(0.0, sc.mass);

  if (root.contains("channels")) {
    if (!root["channels"].is_array()) {
      diag.add("scenario.channels", "expected an array");
    } else {
      std::size_t i = 0;
      for (const auto& entry : root["channels"]) {
        const std::string path =
            "scenario.channels[" + std::to_string(i++) + "]";
        if (!entry.is_object()) {
          diag.add(path, "expected a channel object");
          continue;
        }
        expect_keys(entry, path, {"potential", "strength", "point"}, diag);
        ChannelSpec ch;
        if (!entry.contains("potential")) {
          diag.add(path + ".potential", "required");
          ch.potential = PotentialSpec::constant(0.0, sc.mass);
        } else {
          ch.potential = parse_potential(entry["potential"],
                                         path + ".potential", sc.mass, diag);
        }
        if (!entry.contains("strength"))
          diag.add(path + ".strength", "required");
        else
          ch.strength = parse_strength(entry["strength"], path + ".strength",
                                       diag);
        ch.point = number_or(entry, "point", path, 0.0, diag);
        sc.channels.push_back(std::move(ch));
      }
    }
  }

  if (root.contains("continuum")) {
    const json& cont = root["continuum"];
    const std::string path = "scenario.continuum";
    if (!cont.is_object()) {
      diag.add(path, "expected an object");
    } else {
      expect_keys(cont, path, {"kernel", "amplitude", "attach_point", "table"},
                  diag);
      ContinuumSystem cs;
      cs.driver = sc.driver;
      cs.convention = sc.convention;
      cs.numeric_step = sc.numeric_step;
      cs.attach_point = number_or(cont, "attach_point", path, 0.0, diag);
      const std::string kernel =
          cont.contains("kernel") && cont["kernel"].is_string()
              ? cont["kernel"].get<std::string>()
              : "";
      try {
        if (kernel == "exponential") {
          if (!cont.contains("amplitude"))
            diag.add(path + ".amplitude", "required");
          cs.kernel = CouplingKernel::exponential(
              number_or(cont, "amplitude", path, 0.0, diag));
        } else if (kernel == "tabulated") {
          std::vector<std::pair<double, double>> rows;
          if (!cont.contains("table") || !cont["table"].is_array()) {
            diag.add(path + ".table", "expected an array of [eps, k2] pairs");
          } else {
            for (const auto& row : cont["table"]) {
              if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
                  !row[1].is_number()) {
                diag.add(path + ".table", "expected [eps, k2] number pairs");
                rows.clear();
                break;
              }
              rows.emplace_back(row[0].get<double>(), row[1].get<double>());
            }
          }
          if (!rows.empty()) cs.kernel = CouplingKernel::tabulated(rows);
        } else {
          diag.add(path + ".kernel",
                   "expected \"exponential\" or \"tabulated\"");
        }
      } catch (const Error& err) {
        diag.add(path, err.what());
      }
      sc.continuum = std::move(cs);
    }
  }

  if (!sc.channels.empty() && sc.continuum)
    diag.add("scenario",
             "channels and continuum are alternatives; specify only one");

  if (!root.contains("commands") || !root["commands"].is_array()) {
    diag.add("scenario.commands", "expected an array of commands");
  } else {
    std::size_t i = 0;
    std::set<std::string> outputs;
    for (const auto& entry : root["commands"]) {
      const std::string path = "scenario.commands[" + std::to_string(i++) + "]";
      Command cmd = parse_command(entry, path, sc, diag);
      if (!cmd.output.empty() && !outputs.insert(cmd.output).second)
        diag.add(path + ".output", "duplicate output file " + cmd.output);
      sc.commands.push_back(std::move(cmd));
    }
  }
  return sc;
}

}  // namespace

std::uint64_t fnv1a_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

Scenario parse_scenario_text(const std::string& text) {
  Diagnostics diag;
  Scenario sc = parse_impl(text, diag);
  if (!diag.ok())
    throw Error(ErrorKind::SchemaError, kModule, diag.problems.front());
  return sc;
}

std::vector<std::string> validate_scenario_text(const std::string& text) {
  Diagnostics diag;
  parse_impl(text, diag);
  return diag.problems;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::SchemaError, kModule,
                "cannot read scenario file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str());
}

MultiChannelSystem scenario_system(const Scenario& sc) {
  MultiChannelSystem sys;
  sys.driver = sc.driver;
  sys.channels = sc.channels;
  sys.convention = sc.convention;
  sys.numeric_step = sc.numeric_step;
  return sys;
}

namespace {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::uint64_t hash,
            const std::vector<std::string>& columns) {
    file_ = std::fopen(path.string().c_str(), "wb");
    if (!file_)
      throw Error(ErrorKind::DomainError, kModule,
                  "cannot open output file " + path.string());
    std::fprintf(file_, "# crosskit %s scenario %016" PRIx64 "\n", kVersion,
                 hash);
    for (std::size_t i = 0; i < columns.size(); ++i)
      std::fprintf(file_, "%s%s", columns[i].c_str(),
                   i + 1 < columns.size() ? "," : "\n");
  }
  ~CsvWriter() {
    if (file_) std::fclose(file_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i)
      std::fprintf(file_, "%.15g%s", values[i],
                   i + 1 < values.size() ? "," : "\n");
    ++rows_;
  }
  void text_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      std::fprintf(file_, "%s%s", cells[i].c_str(),
                   i + 1 < cells.size() ? "," : "\n");
    ++rows_;
  }
  std::size_t rows() const { return rows_; }

 private:
  std::FILE* file_ = nullptr;
  std::size_t rows_ = 0;
};

TwoChannelSystem first_channel_system(const Scenario& sc, double strength) {
  TwoChannelSystem sys;
  sys.channel1 = sc.driver;
  sys.channel2 = sc.channels.front().potential;
  sys.coupling = {strength, sc.channels.front().point};
  sys.convention = sc.convention;
  sys.numeric_step = sc.numeric_step;
  return sys;
}

void run_green(const Scenario& sc, const Command& cmd, CsvWriter& csv,
               int threads) {
  const GreenEvaluator g = GreenEvaluator::for_potential(
      sc.driver, sc.convention, sc.numeric_step);
  std::vector<std::array<double, 3>> rows(cmd.energies.size());
  parallel_for(cmd.energies.size(), threads, [&](std::size_t i) {
    const Complex v =
        g(cmd.position, cmd.position, EnergyPoint{cmd.energies[i], 0.0});
    rows[i] = {cmd.energies[i], v.real(), v.imag()};
  });
  for (const auto& r : rows) csv.row({r[0], r[1], r[2]});
}

void run_solve2(const Scenario& sc, const Command& cmd, CsvWriter& csv,
                int threads) {
  const TwoChannelSystem sys =
      first_channel_system(sc, sc.channels.front().strength.real());
  std::vector<std::array<double, 6>> rows(cmd.energies.size());
  parallel_for(cmd.energies.size(), threads, [&](std::size_t i) {
    const double e = cmd.energies[i];
    const ScatterResult res = scatter_two(e, sys);
    const double absd = std::abs(denominator(EnergyPoint{e, 0.0}, sys));
    rows[i] = {e, res.R, res.T, res.transfer[0], res.flux_sum, absd};
  });
  for (const auto& r : rows) csv.row({r[0], r[1], r[2], r[3], r[4], r[5]});
}

void run_solven(const Scenario& sc, const Command& cmd, CsvWriter& csv,
                int threads) {
  const MultiChannelSystem sys = scenario_system(sc);
  const std::size_t nch = sys.channels.size();
  std::vector<std::vector<double>> rows(cmd.energies.size());
  parallel_for(cmd.energies.size(), threads, [&](std::size_t i) {
    const double e = cmd.energies[i];
    const ScatterResult res = scatter_multi(e, sys);
    std::vector<double> row = {e, res.R, res.T, res.flux_sum};
    for (std::size_t c = 0; c < nch; ++c) row.push_back(res.transfer[c]);
    rows[i] = std::move(row);
  });
  for (const auto& r : rows) csv.row(r);
}

void run_continuum(const Scenario& sc, const Command& cmd, CsvWriter& csv,
                   int threads) {
  const ContinuumSystem& sys = *sc.continuum;
  std::vector<std::array<double, 4>> rows(cmd.energies.size());
  parallel_for(cmd.energies.size(), threads, [&](std::size_t i) {
    const Complex v = effective_potential(EnergyPoint{cmd.energies[i], 0.0}, sys);
    rows[i] = {cmd.energies[i], v.real(), v.imag(), std::abs(v)};
  });
  for (const auto& r : rows) csv.row({r[0], r[1], r[2], r[3]});
}

void run_timedomain(const Scenario& sc, const Command& cmd, CsvWriter& csv,
                    int threads) {
  const MultiChannelSystem sys = scenario_system(sc);
  const WaveField psi0 = make_gaussian_packet(
      cmd.packet.center, cmd.packet.sigma, cmd.packet.momentum,
      cmd.packet.grid);
  if (cmd.frequencies.size() < 2)
    throw Error(ErrorKind::DomainError, kModule,
                "timedomain needs a frequency grid");
  const double dw = cmd.frequencies[1] - cmd.frequencies[0];
  for (std::size_t i = 1; i < cmd.frequencies.size(); ++i)
    if (std::abs(cmd.frequencies[i] - cmd.frequencies[i - 1] - dw) >
        1e-9 * std::abs(dw))
      throw Error(ErrorKind::DomainError, kModule,
                  "timedomain frequency grid must be uniform");
  FrequencyGrid grid{cmd.frequencies.front(), cmd.frequencies.back(),
                     cmd.frequencies.size()};
  TimeReconstructOptions opts;
  opts.eta = cmd.eta;
  opts.threads = threads;
  const TimeDomainResult res = time_reconstruct(sys, psi0, cmd.times, grid,
                                                opts);
  for (std::size_t k = 0; k < res.times.size(); ++k)
    csv.row({res.times[k], res.survival[k], res.amplitude[k].real(),
             res.amplitude[k].imag()});
}

void run_sweep(const Scenario& sc, const Command& cmd, CsvWriter& csv,
               int threads) {
  const double base = sc.channels.front().strength.real();
  std::vector<std::array<double, 6>> rows(cmd.values.size());
  parallel_for(cmd.values.size(), threads, [&](std::size_t i) {
    const double v = cmd.values[i];
    const double strength = cmd.parameter == "strength" ? base * v : base;
    const double energy = cmd.parameter == "strength" ? cmd.energy : v;
    const TwoChannelSystem sys = first_channel_system(sc, strength);
    const ScatterResult res = scatter_two(energy, sys);
    const double absd =
        std::abs(denominator(EnergyPoint{energy, 0.0}, sys));
    rows[i] = {v, res.R, res.T, res.transfer[0], res.flux_sum, absd};
  });
  for (const auto& r : rows) csv.row({r[0], r[1], r[2], r[3], r[4], r[5]});
}

// cross-checks of the configured system against the independent routes
bool run_validate(const Scenario& sc, const Command& cmd, CsvWriter& csv,
                  std::ostream& log) {
  bool all_pass = true;
  char buf[64];
  auto emit = [&](const std::string& check, double param, double err,
                  double tol) {
    const bool pass = err <= tol;
    all_pass = all_pass && pass;
    std::snprintf(buf, sizeof buf, "%.15g", param);
    std::string param_s = buf;
    std::snprintf(buf, sizeof buf, "%.15g", err);
    csv.text_row({check, param_s, buf, pass ? "pass" : "fail"});
    if (!pass)
      log << "validate: " << check << " at " << param_s << " error " << buf
          << "\n";
  };

  const bool scatterable =
      !sc.channels.empty() && sc.driver.kind == PotentialKind::Constant &&
      std::all_of(sc.channels.begin(), sc.channels.end(),
                  [](const ChannelSpec& ch) {
                    return ch.potential.kind == PotentialKind::Constant &&
                           ch.strength.imag() == 0.0;
                  }) &&
      sc.convention == GreenConvention::Retarded;

  if (scatterable) {
    const MultiChannelSystem sys = scenario_system(sc);
    for (const double e : cmd.energies) {
      if (!(e > sc.driver.v0)) continue;
      const ScatterResult a = scatter_multi(e, sys);
      const ScatterResult b = matching_solve(sys, e);
      double err = std::max(std::abs(a.R - b.R), std::abs(a.T - b.T));
      for (std::size_t c = 0; c < sys.channels.size(); ++c)
        err = std::max(err, std::abs(a.transfer[c] - b.transfer[c]));
      emit("two_route", e, err, 1e-10);
      emit("flux", e, std::abs(a.flux_sum - 1.0), 1e-12);
    }
  }

  {
    const GreenEvaluator g = GreenEvaluator::for_potential(
        sc.driver, sc.convention, sc.numeric_step);
    double lo = -1.0, hi = 1.0;
    if (sc.driver.kind == PotentialKind::Sampled) {
      lo = sc.driver.samples.front().first;
      hi = sc.driver.samples.back().first;
    }
    const double xa = lo + 0.3 * (hi - lo);
    const double xb = lo + 0.7 * (hi - lo);
    for (const double e : cmd.energies) {
      if (sc.driver.kind == PotentialKind::Constant && e == sc.driver.v0)
        continue;
      const EnergyPoint w{e, 0.0};
      const Complex gab = g(xa, xb, w);
      const Complex gba = g(xb, xa, w);
      emit("green_symmetry", e,
           std::abs(gab - gba) / std::max(1.0, std::abs(gab)), 1e-10);
    }
  }

  if (sc.continuum && sc.continuum->kernel.form == KernelForm::Exponential) {
    for (const double e : cmd.energies) {
      if (!(e > 0.0)) continue;
      double err = 0.0;
      for (const GreenConvention conv :
           {GreenConvention::Retarded, GreenConvention::Principal}) {
        ContinuumSystem cs = *sc.continuum;
        cs.convention = conv;
        const Complex v = effective_potential(EnergyPoint{e, 0.0}, cs);
        const Complex ref = analytic_special_value(
            EnergyPoint{e, 0.0}, cs.kernel.amplitude);
        err = std::max(err, std::abs(v - ref) / std::max(1e-12, std::abs(ref)));
      }
      emit("continuum_identity", e, err, 1e-8);
    }
  }
  return all_pass;
}

}  // namespace

int run_scenario(const Scenario& sc, const std::string& out_dir, int threads,
                 std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  bool validate_failed = false;
  for (const Command& cmd : sc.commands) {
    const fs::path out = fs::path(out_dir) / cmd.output;
    if (cmd.name == "green") {
      CsvWriter csv(out, sc.hash, {"energy", "re_g", "im_g"});
      run_green(sc, cmd, csv, threads);
      log << "green: wrote " << out.string() << " (" << csv.rows()
          << " rows)\n";
    } else if (cmd.name == "solve2") {
      CsvWriter csv(out, sc.hash,
                    {"energy", "R", "T", "transfer", "flux",
                     "abs_denominator"});
      run_solve2(sc, cmd, csv, threads);
      log << "solve2: wrote " << out.string() << " (" << csv.rows()
          << " rows)\n";
    } else if (cmd.name == "solven") {
      std::vector<std::string> cols = {"energy", "R", "T", "flux"};
      for (std::size_t c = 0; c < sc.channels.size(); ++c)
        cols.push_back("transfer_" + std::to_string(c + 1));
      CsvWriter csv(out, sc.hash, cols);
      run_solven(sc, cmd, csv, threads);
      log << "solven: wrote " << out.string() << " (" << csv.rows()
          << " rows)\n";
    } else if (cmd.name == "continuum") {
      CsvWriter csv(out, sc.hash, {"omega", "re_v", "im_v", "abs_v"});
      run_continuum(sc, cmd, csv, threads);
      log << "continuum: wrote " << out.string() << " (" << csv.rows()
          << " rows)\n";
    } else if (cmd.name == "timedomain") {
      CsvWriter csv(out, sc.hash,
                    {"time", "survival", "re_amplitude", "im_amplitude"});
      run_timedomain(sc, cmd, csv, threads);
      log << "timedomain: wrote " << out.string() << " (" << csv.rows()
          << " rows)\n";
    } else if (cmd.name == "sweep") {
      CsvWriter csv(out, sc.hash,
                    {"value", "R", "T", "transfer", "flux",
                     "abs_denominator"});
      run_sweep(sc, cmd, csv, threads);
      log << "sweep: wrote " << out.string() << " (" << csv.rows()
          << " rows)\n";
    } else if (cmd.name == "validate") {
      CsvWriter csv(out, sc.hash, {"check", "parameter", "error", "status"});
      const bool ok = run_validate(sc, cmd, csv, log);
      validate_failed = validate_failed || !ok;
      log << "validate: wrote " << out.string() << " (" << csv.rows()
          << " rows)" << (ok ? "" : " with failures") << "\n";
    }
  }
  return validate_failed ? 3 : 0;
}

}  // namespace crosskit
