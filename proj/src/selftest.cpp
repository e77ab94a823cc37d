#include "crosskit/selftest.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "crosskit/continuum.hpp"
#include "crosskit/multichannel.hpp"
#include "crosskit/oracle.hpp"
#include "crosskit/two_state.hpp"
#include "crosskit/util.hpp"

#include "golden_data.hpp"

namespace crosskit {

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::string num(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// 1: the exponential kernel is built against the coincident channel family,
// so its effective potential must integrate to amplitude * omega exactly,
// in either convention.
Outcome check_continuum_identity() {
  Stopwatch sw;
  double worst = 0.0;
  for (const GreenConvention conv :
       {GreenConvention::Principal, GreenConvention::Retarded})
    for (const double a : {0.3, 1.0})
      for (const double w : {0.25, 0.5, 1.0, 2.0, 5.0, 8.0}) {
        ContinuumSystem sys;
        sys.driver = PotentialSpec::constant(0.0, 1.0);
        sys.kernel = CouplingKernel::exponential(a);
        sys.convention = conv;
        const Complex v = effective_potential(EnergyPoint{w, 0.0}, sys);
        const Complex ref = analytic_special_value(EnergyPoint{w, 0.0}, a);
        worst = std::max(worst, std::abs(v - ref) / std::abs(ref));
      }
  const double t = sw.seconds();
  return {worst <= 1e-8 && t < 1.0,
          "max rel err " + num(worst) + ", " + num(t) + "s"};
}

struct ScatterDraws {
  std::vector<double> flux_errors;
  double worst_route = 0.0;
  double seconds = 0.0;
};

// 2: the resolvent route and the plane-wave matching route share no algebra;
// they must produce the same R, T and transfer on random open systems.
ScatterDraws run_scatter_draws() {
  Stopwatch sw;
  ScatterDraws out;
  std::mt19937_64 rng(20260814ull);
  auto uni = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  for (int n = 0; n < 100; ++n) {
    TwoChannelSystem sys;
    double e = 0.0;
    while (true) {
      const double m = uni(0.5, 2.0);
      const double v1 = uni(-2.0, 2.0);
      sys.channel1 = PotentialSpec::constant(v1, m);
      sys.channel2 = PotentialSpec::constant(v1 + uni(-4.0, 4.0), m);
      sys.coupling = {uni(-3.0, 3.0), uni(-2.0, 2.0)};
      e = v1 + uni(0.05, 6.0);
      if (std::abs(denominator(EnergyPoint{e, 0.0}, sys)) >= 1e-4) break;
    }
    const ScatterResult a = scatter_two(e, sys);

    MultiChannelSystem ms;
    ms.driver = sys.channel1;
    ms.channels = {{sys.channel2, Complex(sys.coupling.strength, 0.0),
                    sys.coupling.location}};
    const ScatterResult b = matching_solve(ms, e);

    double err = std::max(std::abs(a.R - b.R), std::abs(a.T - b.T));
    err = std::max(err, std::abs(a.transfer[0] - b.transfer[0]));
    out.worst_route = std::max(out.worst_route, err);
    out.flux_errors.push_back(std::abs(a.flux_sum - 1.0));
  }
  out.seconds = sw.seconds();
  return out;
}

// 3: R + T + sum(transfer) = 1 on every open system, including multichannel
// ones with up to five coupled channels.
Outcome check_flux(const ScatterDraws& draws) {
  Stopwatch sw;
  double worst = 0.0;
  for (const double e : draws.flux_errors) worst = std::max(worst, e);
  std::mt19937_64 rng(77130992ull);
  auto uni = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  for (int n = 0; n < 50; ++n) {
    const double m = uni(0.5, 2.0);
    const double v1 = uni(-2.0, 2.0);
    MultiChannelSystem sys;
    sys.driver = PotentialSpec::constant(v1, m);
    const std::size_t nch = 1 + static_cast<std::size_t>(rng() % 5);
    for (std::size_t c = 0; c < nch; ++c)
      sys.channels.push_back({PotentialSpec::constant(uni(-2.0, 3.0), m),
                              Complex(uni(-2.0, 2.0), 0.0), uni(-2.0, 2.0)});
    const double e = v1 + uni(0.05, 6.0);
    const ScatterResult res = scatter_multi(e, sys);
    worst = std::max(worst, std::abs(res.flux_sum - 1.0));
  }
  return {worst <= 1e-12,
          "max |flux-1| " + num(worst) + " over 150 systems, " +
              num(sw.seconds()) + "s"};
}

double probe_diff(const DressedGreen& a, const DressedGreen& b) {
  const double xs[] = {-1.2, 0.7, 0.1, 2.0, -2.5};
  double worst = 0.0;
  for (const double x : xs)
    for (const double x0 : xs) {
      const Complex va = a(x, x0);
      const Complex vb = b(x, x0);
      worst = std::max(worst,
                       std::abs(va - vb) / std::max(1.0, std::abs(vb)));
    }
  return worst;
}

// 4: the staged recursion, the dense solve, and any channel permutation all
// describe one operator; a single channel must reduce to the closed form.
Outcome check_dressing() {
  Stopwatch sw;
  MultiChannelSystem sys;
  sys.driver = PotentialSpec::constant(0.0, 1.0);
  sys.channels = {{PotentialSpec::constant(0.8, 1.0), Complex(0.6), -0.4},
                  {PotentialSpec::constant(-0.5, 1.0), Complex(0.9), 0.3},
                  {PotentialSpec::constant(1.5, 1.0), Complex(-0.7), 1.1},
                  {PotentialSpec::constant(0.3, 1.0), Complex(0.5, 0.2), 0.9}};
  const EnergyPoint omegas[] = {{0.9, 0.35}, {2.2, 0.01}, {-1.3, 0.5},
                                {0.6, 1e-3}};
  double worst_route = 0.0;
  double worst_perm = 0.0;
  for (const EnergyPoint w : omegas) {
    const DressedGreen seq = dress_sequential(sys, w);
    const DressedGreen dir = dress_direct(sys, w);
    worst_route = std::max(worst_route, probe_diff(seq, dir));

    MultiChannelSystem shuffled = sys;
    std::reverse(shuffled.channels.begin(), shuffled.channels.end());
    std::swap(shuffled.channels[0], shuffled.channels[2]);
    worst_perm =
        std::max(worst_perm, probe_diff(dress_sequential(shuffled, w), seq));
  }

  MultiChannelSystem single = sys;
  single.channels.resize(1);
  TwoChannelSystem two;
  two.channel1 = sys.driver;
  two.channel2 = single.channels[0].potential;
  two.coupling = {single.channels[0].strength.real(),
                  single.channels[0].point};
  double worst_two = 0.0;
  for (const EnergyPoint w : omegas) {
    const DressedGreen dd = dress_direct(single, w);
    const double xs[] = {-1.2, 0.7, 0.1};
    for (const double x : xs)
      for (const double x0 : xs)
        worst_two = std::max(
            worst_two, std::abs(dd(x, x0) - dressed_green(GreenBlock::G11, x,
                                                          x0, w, two)));
  }
  const double t = sw.seconds();
  const bool pass = worst_route <= 1e-10 && worst_perm <= 1e-10 &&
                    worst_two <= 1e-14 && t < 5.0;
  return {pass, "route " + num(worst_route) + ", permutation " +
                    num(worst_perm) + ", closed form " + num(worst_two) +
                    ", " + num(t) + "s"};
}

Complex side_derivative(const GreenEvaluator& g, double x0, EnergyPoint w,
                        double h, int side) {
  auto one_sided = [&](double step) {
    const double s = side * step;
    return (-3.0 * g(x0, x0, w) + 4.0 * g(x0 + s, x0, w) -
            g(x0 + 2.0 * s, x0, w)) /
           (2.0 * s);
  };
  return (4.0 * one_sided(h / 2) - one_sided(h)) / 3.0;
}

// 5: symmetry in the arguments, the derivative jump 2m across the source,
// non-positive damping on the real axis, and the vanishing-slope limit of
// the linear-potential kernel.
Outcome check_green_identities() {
  Stopwatch sw;
  std::vector<std::pair<double, double>> bump;
  for (int i = 0; i <= 320; ++i) {
    const double x = -8.0 + 0.05 * i;
    bump.emplace_back(x, 0.4 * std::exp(-0.25 * x * x));
  }
  const GreenEvaluator evals[] = {
      GreenEvaluator::constant(PotentialSpec::constant(0.4, 1.0)),
      GreenEvaluator::linear(PotentialSpec::linear(0.2, 0.7, 1.0)),
      GreenEvaluator::numeric(PotentialSpec::sampled(bump, 1.0), 0.01)};

  double worst_sym = 0.0, worst_jump = 0.0, worst_im = 0.0;
  const EnergyPoint wc{0.7, 0.25};
  for (const GreenEvaluator& g : evals) {
    for (const auto& [x, x0] :
         {std::pair{-1.1, 0.8}, std::pair{0.45, 2.2}}) {
      const Complex gab = g(x, x0, wc);
      const Complex gba = g(x0, x, wc);
      worst_sym = std::max(worst_sym,
                           std::abs(gab - gba) / std::max(1.0, std::abs(gab)));
    }
    const Complex jump = side_derivative(g, 0.3, wc, 1e-2, +1) -
                         side_derivative(g, 0.3, wc, 1e-2, -1);
    worst_jump = std::max(worst_jump, std::abs(jump - 2.0) / 2.0);
    worst_im = std::max(worst_im, g(0.3, 0.3, EnergyPoint{1.7, 0.0}).imag());
  }

  // slope -> 0: the Airy kernel collapses onto the constant one linearly in
  // the slope, and the sampled flat potential reproduces it outright
  const EnergyPoint wl{0.7, 0.25};
  const Complex ref = green_constant(-0.6, 0.3, wl,
                                     PotentialSpec::constant(0.2, 1.0),
                                     GreenConvention::Retarded);
  bool shrinking = true;
  double prev = 1e300, last = 0.0;
  for (const double s : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
    const GreenEvaluator g =
        GreenEvaluator::linear(PotentialSpec::linear(0.2, s, 1.0));
    last = std::abs(g(-0.6, 0.3, wl) - ref) / std::abs(ref);
    shrinking = shrinking && last < prev;
    prev = last;
  }
  std::vector<std::pair<double, double>> flat;
  for (int i = 0; i <= 320; ++i) flat.emplace_back(-8.0 + 0.05 * i, 0.2);
  const GreenEvaluator gf =
      GreenEvaluator::numeric(PotentialSpec::sampled(flat, 1.0), 0.01);
  const double flat_err = std::abs(gf(-0.6, 0.3, wl) - ref) / std::abs(ref);

  const double t = sw.seconds();
  const bool pass = worst_sym <= 1e-10 && worst_jump <= 1e-6 &&
                    worst_im <= 1e-12 && shrinking && last <= 1e-6 &&
                    flat_err <= 1e-6;
  return {pass, "symmetry " + num(worst_sym) + ", jump " + num(worst_jump) +
                    ", im " + num(worst_im) + ", slope limit " + num(last) +
                    (shrinking ? " shrinking" : " NOT shrinking") +
                    ", flat " + num(flat_err) + ", " + num(t) + "s"};
}

// 6: the midpoint discretization of the continuum converges to the smooth
// effective potential, and the dressed propagators follow.
Outcome check_discretization() {
  Stopwatch sw;
  ContinuumSystem cs;
  cs.driver = PotentialSpec::constant(0.0, 1.0);
  cs.kernel = CouplingKernel::exponential(0.3);
  cs.attach_point = 0.0;
  const EnergyPoint w{2.0, 0.0};
  const Complex v_ref = analytic_special_value(w, 0.3);

  bool shrinking = true;
  double prev = 1e300, last = 0.0;
  MultiChannelSystem finest;
  for (const std::size_t n : {64u, 256u, 1024u, 4096u}) {
    const MultiChannelSystem d = discretize_continuum(cs, n, 32.0, w);
    CompensatedComplexSum sum;
    for (const EffectiveWeight& ew : effective_weights(w, d))
      sum.add(ew.weight);
    last = std::abs(sum.value() - v_ref) / std::abs(v_ref);
    shrinking = shrinking && last < prev;
    prev = last;
    finest = d;
  }

  const DressedGreen dd = dress_direct(finest, w);
  const Complex ga = dd(-0.4, 0.7);
  const Complex gb = dressed_continuum_green(-0.4, 0.7, w, cs);
  const double dressed_err = std::abs(ga - gb) / std::abs(gb);

  const double t = sw.seconds();
  const bool pass = shrinking && last <= 1e-3 && dressed_err <= 1e-3 &&
                    t < 30.0;
  return {pass, "weight err " + num(last) +
                    (shrinking ? " shrinking" : " NOT shrinking") +
                    ", dressed err " + num(dressed_err) + ", " + num(t) + "s"};
}

// 7: survival probabilities from the frequency-side reconstruction against
// split-operator propagation of the width-regularized coupling,
// extrapolated to zero width.
Outcome check_time_domain(int threads) {
  Stopwatch sw;
  const std::vector<double> times = linspace(0.0, 8.0, 81);
  const std::vector<double> rec_grid = linspace(-15.6, 3.6, 1601);
  const FrequencyGrid freq{-15.0, 40.0, 110001};

  PropagationConfig cfg;
  cfg.x_min = -40.0;
  cfg.x_max = 25.0;
  cfg.points = 2048;
  cfg.dt = 2e-3;
  cfg.t_max = 8.0;
  cfg.sample_stride = 50;
  cfg.absorber_width = 6.0;
  cfg.absorber_strength = 4.0;
  const double h = (cfg.x_max - cfg.x_min) / static_cast<double>(cfg.points);
  std::vector<double> prop_grid(cfg.points);
  for (std::size_t j = 0; j < cfg.points; ++j)
    prop_grid[j] = cfg.x_min + h * static_cast<double>(j);
  const std::array<double, 3> widths = {8.0 * h, 6.0 * h, 4.0 * h};

  std::vector<MultiChannelSystem> systems(2);
  systems[0].driver = PotentialSpec::constant(0.0, 1.0);
  systems[0].channels = {
      {PotentialSpec::constant(0.5, 1.0), Complex(0.35), 0.0}};
  systems[1].driver = PotentialSpec::constant(0.0, 1.0);
  systems[1].channels = {
      {PotentialSpec::constant(0.4, 1.0), Complex(0.3), -0.5},
      {PotentialSpec::constant(-0.3, 1.0), Complex(0.25), 0.7}};

  double worst = 0.0;
  for (const MultiChannelSystem& sys : systems) {
    const WaveField psi0 = make_gaussian_packet(-6.0, 1.2, 1.6, rec_grid);
    TimeReconstructOptions opts;
    opts.eta = 1e-3;
    opts.threads = threads;
    const TimeDomainResult rec = time_reconstruct(sys, psi0, times, freq,
                                                  opts);

    const WaveField psi0p = make_gaussian_packet(-6.0, 1.2, 1.6, prop_grid);
    std::array<std::vector<double>, 3> surv;
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
      std::vector<RegularizedCoupling> couplings;
      for (const ChannelSpec& ch : sys.channels)
        couplings.push_back({ch.strength.real(), ch.point, widths[wi]});
      surv[wi] = split_operator_propagate(sys, couplings, psi0p, cfg).survival;
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
      const Extrapolated p = delta_width_extrapolate(
          {WidthPoint{widths[0], surv[0][k]}, WidthPoint{widths[1], surv[1][k]},
           WidthPoint{widths[2], surv[2][k]}});
      worst = std::max(worst, std::abs(p.value - rec.survival[k]));
    }
  }
  const double t = sw.seconds();
  return {worst <= 5e-3 && t < 300.0,
          "max |dP| " + num(worst) + ", " + num(t) + "s"};
}

// 8: with the second channel closed, the transmission extremum sits at the
// same energy as the minimum of the dressing denominator.
Outcome check_resonance_alignment() {
  TwoChannelSystem sys;
  sys.channel1 = PotentialSpec::constant(0.0, 1.0);
  sys.channel2 = PotentialSpec::constant(1.0, 1.0);
  sys.coupling = {0.8, 0.0};
  std::size_t imin = 0, imax = 0;
  double dmin = 1e300, tmax = -1.0;
  std::vector<double> grid;
  for (int i = 0; i <= 240; ++i) grid.push_back(0.02 + 0.004 * i);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = std::abs(denominator(EnergyPoint{grid[i], 0.0}, sys));
    const double tt = scatter_two(grid[i], sys).T;
    if (d < dmin) {
      dmin = d;
      imin = i;
    }
    if (tt > tmax) {
      tmax = tt;
      imax = i;
    }
  }
  const std::size_t gap = imin > imax ? imin - imax : imax - imin;
  const bool interior = imin > 0 && imin + 1 < grid.size();
  return {gap <= 1 && interior,
          "|D| min at E=" + num(grid[imin]) + ", T max at E=" +
              num(grid[imax]) + ", gap " + num(static_cast<double>(gap))};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool run_cli(const std::string& cli, const std::string& scenario,
             const std::string& out_dir, int threads) {
  std::ostringstream cmd;
  cmd << "'" << cli << "' run '" << scenario << "' --out '" << out_dir
      << "' --threads " << threads << " > /dev/null 2>&1";
  const int rc = std::system(cmd.str().c_str());
  return rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
}

// 9: the CLI run of the frozen scenario is byte-identical across thread
// counts and matches the checked-in baseline.
Outcome check_golden(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path supplied"};
  namespace fs = std::filesystem;
  const fs::path tmp = fs::temp_directory_path() /
                       ("crosskit-acceptance-" + std::to_string(getpid()));
  fs::create_directories(tmp);
  const fs::path scenario = tmp / "golden.json";
  {
    std::ofstream out(scenario, std::ios::binary);
    out << golden::kScenarioJson;
  }
  Outcome res{false, ""};
  const fs::path out1 = tmp / "out1";
  const fs::path out4 = tmp / "out4";
  if (!run_cli(cli, scenario.string(), out1.string(), 1) ||
      !run_cli(cli, scenario.string(), out4.string(), 4)) {
    res.detail = "CLI run failed";
  } else {
    const std::string a = read_file(out1 / "two_channel_solve2.csv");
    const std::string b = read_file(out4 / "two_channel_solve2.csv");
    if (a.empty())
      res.detail = "no output written";
    else if (a != b)
      res.detail = "outputs differ between 1 and 4 threads";
    else if (a != golden::kSolve2Csv)
      res.detail = "output differs from the frozen baseline";
    else
      res = {true, "byte-identical across threads and baseline"};
  }
  std::error_code ec;
  fs::remove_all(tmp, ec);
  return res;
}

}  // namespace

int run_acceptance(const AcceptanceOptions& opts, std::ostream& out) {
  int failures = 0;
  auto report = [&](int index, const char* label, const Outcome& oc) {
    out << (oc.pass ? "PASS" : "FAIL") << " criterion " << index << ": "
        << label << " (" << oc.detail << ")\n";
    if (!oc.pass) ++failures;
  };
  auto guarded = [&](auto&& fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "continuum coupling integrates to its closed form",
         guarded([] { return check_continuum_identity(); }));

  ScatterDraws draws;
  report(2, "resolvent and matching scattering routes agree", guarded([&] {
           draws = run_scatter_draws();
           return Outcome{draws.worst_route <= 1e-10 && draws.seconds < 10.0,
                          "max err " + num(draws.worst_route) +
                              " over 100 systems, " + num(draws.seconds) +
                              "s"};
         }));
  report(3, "scattering flux is conserved",
         guarded([&] { return check_flux(draws); }));
  report(4, "sequential and direct dressing agree",
         guarded([] { return check_dressing(); }));
  report(5, "bare propagator identities hold",
         guarded([] { return check_green_identities(); }));
  report(6, "discretized continuum converges to the smooth limit",
         guarded([] { return check_discretization(); }));
  report(7, "frequency-side survival matches split-operator propagation",
         guarded([&] { return check_time_domain(opts.threads); }));
  report(8, "closed-channel resonance aligns with the denominator minimum",
         guarded([] { return check_resonance_alignment(); }));
  report(9, "scenario outputs are thread-independent and match the baseline",
         guarded([&] { return check_golden(opts.cli_path); }));
  return failures;
}

}  // namespace crosskit
