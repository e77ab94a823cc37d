#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "crosskit/multichannel.hpp"
#include "crosskit/oracle.hpp"
#include "crosskit/two_state.hpp"
#include "crosskit/util.hpp"

using namespace crosskit;

namespace {

MultiChannelSystem free_driver() {
  MultiChannelSystem sys;
  sys.driver = PotentialSpec::constant(0.0, 1.0);
  return sys;
}

double packet_norm(const WaveField& f) {
  const double h = f.grid[1] - f.grid[0];
  double s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double w = (i == 0 || i + 1 == f.values.size()) ? 0.5 : 1.0;
    s += w * std::norm(f.values[i]);
  }
  return s * h;
}

// free-packet survival <psi0|e^{-iHt}|psi0> in closed form
Complex free_survival(double t, double sigma, double k0, double m) {
  const Complex beta(2.0 * sigma * sigma, 0.0);
  const Complex gamma(0.0, t / (2.0 * m));
  return std::sqrt(beta / (beta + gamma)) *
         std::exp(-beta * gamma * k0 * k0 / (beta + gamma));
}

}  // namespace

TEST_CASE("effective weights square the strength without conjugation") {
  MultiChannelSystem sys = free_driver();
  sys.channels = {{PotentialSpec::constant(0.0, 1.0), Complex(1.0), 0.0},
                  {PotentialSpec::constant(0.0, 1.0), Complex(0.0, 1.0), 0.3}};
  const auto ws = effective_weights(EnergyPoint{0.5, 0.0}, sys);
  REQUIRE(ws.size() == 2);
  // G(0,0) = -i at k = 1, so K = 1 gives -i and K = i gives +i
  CHECK(std::abs(ws[0].weight - Complex(0.0, -1.0)) < 1e-14);
  CHECK(std::abs(ws[1].weight - Complex(0.0, 1.0)) < 1e-14);
}

TEST_CASE("one dressed channel reduces to the closed form") {
  MultiChannelSystem sys = free_driver();
  sys.channels = {{PotentialSpec::constant(0.9, 1.0), Complex(0.8), -0.2}};
  TwoChannelSystem two;
  two.channel1 = sys.driver;
  two.channel2 = sys.channels[0].potential;
  two.coupling = {0.8, -0.2};
  const EnergyPoint w{0.7, 0.1};
  for (const auto& [x, x0] : {std::pair{-1.0, 0.5}, std::pair{0.2, 0.2}}) {
    const Complex a = dress_sequential(sys, w)(x, x0);
    const Complex b = dress_direct(sys, w)(x, x0);
    const Complex ref = dressed_green(GreenBlock::G11, x, x0, w, two);
    CHECK(std::abs(a - ref) < 1e-14);
    CHECK(std::abs(b - ref) < 1e-14);
  }
}

TEST_CASE("dressing routes and channel order are interchangeable") {
  MultiChannelSystem sys = free_driver();
  sys.channels = {{PotentialSpec::constant(0.8, 1.0), Complex(0.6), -0.4},
                  {PotentialSpec::constant(-0.5, 1.0), Complex(0.9), 0.3},
                  {PotentialSpec::constant(0.3, 1.0), Complex(0.5, 0.2), 0.9}};
  const EnergyPoint w{1.1, 0.25};
  const DressedGreen seq = dress_sequential(sys, w);
  const DressedGreen dir = dress_direct(sys, w);
  MultiChannelSystem perm = sys;
  std::swap(perm.channels[0], perm.channels[2]);
  const DressedGreen per = dress_sequential(perm, w);
  for (const double x : {-1.5, 0.0, 0.8})
    for (const double x0 : {-0.6, 1.9}) {
      const Complex a = seq(x, x0);
      CHECK(std::abs(a - dir(x, x0)) < 1e-12 * std::max(1.0, std::abs(a)));
      CHECK(std::abs(a - per(x, x0)) < 1e-12 * std::max(1.0, std::abs(a)));
    }
  CHECK_FALSE(dir.ill_conditioned());
}

TEST_CASE("channels at one point merge instead of going singular") {
  MultiChannelSystem sys = free_driver();
  sys.channels = {{PotentialSpec::constant(0.8, 1.0), Complex(0.6), 0.25},
                  {PotentialSpec::constant(1.7, 1.0), Complex(0.4), 0.25}};
  const EnergyPoint w{0.6, 0.05};
  const DressedGreen dir = dress_direct(sys, w);
  CHECK(dir.correction_points().size() == 1);
  const DressedGreen seq = dress_sequential(sys, w);
  const Complex a = dir(-0.7, 1.2);
  CHECK(std::abs(a - seq(-0.7, 1.2)) < 1e-12 * std::max(1.0, std::abs(a)));
}

TEST_CASE("multichannel scattering reduces to the two-channel solver") {
  MultiChannelSystem sys = free_driver();
  sys.channels = {{PotentialSpec::constant(0.9, 1.0), Complex(0.8), -0.2}};
  TwoChannelSystem two;
  two.channel1 = sys.driver;
  two.channel2 = sys.channels[0].potential;
  two.coupling = {0.8, -0.2};
  const ScatterResult a = scatter_multi(1.4, sys);
  const ScatterResult b = scatter_two(1.4, two);
  CHECK(std::abs(a.r - b.r) < 1e-13);
  CHECK(std::abs(a.t - b.t) < 1e-13);
  CHECK(std::abs(a.transfer[0] - b.transfer[0]) < 1e-13);
}

TEST_CASE("multichannel scattering matches the oracle with shared points") {
  MultiChannelSystem sys = free_driver();
  sys.channels = {{PotentialSpec::constant(0.6, 1.0), Complex(0.7), 0.4},
                  {PotentialSpec::constant(-0.8, 1.0), Complex(0.5), 0.4},
                  {PotentialSpec::constant(2.4, 1.0), Complex(-0.6), -0.9}};
  const double e = 1.8;
  const ScatterResult a = scatter_multi(e, sys);
  const ScatterResult b = matching_solve(sys, e);
  CHECK(std::abs(a.R - b.R) < 1e-12);
  CHECK(std::abs(a.T - b.T) < 1e-12);
  for (std::size_t c = 0; c < 3; ++c)
    CHECK(std::abs(a.transfer[c] - b.transfer[c]) < 1e-12);
  CHECK(a.flux_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian packets are normalized on a wide grid") {
  const std::vector<double> grid = linspace(-30.0, 30.0, 3001);
  const WaveField f = make_gaussian_packet(-2.0, 1.3, 0.9, grid);
  CHECK(packet_norm(f) == doctest::Approx(1.0).epsilon(1e-9));
  // peak sits at the requested center
  std::size_t peak = 0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (std::abs(f.values[i]) > std::abs(f.values[peak])) peak = i;
  CHECK(f.grid[peak] == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("free-packet survival matches the closed form") {
  const MultiChannelSystem sys = free_driver();
  // the kink of G0 along x = y costs O(h^2) in the packet-grid quadrature
  // and adds up coherently at t = 0, so the grid is kept fine
  const std::vector<double> grid = linspace(-30.0, 40.0, 4001);
  const WaveField psi0 = make_gaussian_packet(0.0, 1.0, 1.6, grid);
  const std::vector<double> times = linspace(0.0, 6.0, 25);
  const FrequencyGrid freq{-20.0, 30.0, 40001};
  TimeReconstructOptions opts;
  opts.eta = 4e-3;
  opts.threads = 2;
  const TimeDomainResult res = time_reconstruct(sys, psi0, times, freq, opts);
  CHECK(res.survival[0] == doctest::Approx(1.0).epsilon(2e-3));
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Complex ref = free_survival(times[k], 1.0, 1.6, 1.0);
    CHECK(std::abs(res.amplitude[k] - ref) < 1e-3);
  }
}

TEST_CASE("time reconstruction validates its inputs") {
  const MultiChannelSystem sys = free_driver();
  const std::vector<double> grid = linspace(-10.0, 10.0, 201);
  const WaveField psi0 = make_gaussian_packet(0.0, 1.0, 0.0, grid);
  const std::vector<double> times = linspace(0.0, 8.0, 9);
  TimeReconstructOptions opts;

  opts.eta = -1.0;
  CHECK_THROWS_AS(
      time_reconstruct(sys, psi0, times, {-5.0, 5.0, 20001}, opts), Error);
  opts.eta = 1e-3;
  CHECK_THROWS_AS(time_reconstruct(sys, psi0, times, {-5.0, 5.0, 8}, opts),
                  Error);
  // spacing 0.5 cannot resolve oscillations up to t = 8
  CHECK_THROWS_AS(time_reconstruct(sys, psi0, times, {-5.0, 5.0, 21}, opts),
                  Error);
  std::vector<double> bad = times;
  std::swap(bad[2], bad[5]);
  CHECK_THROWS_AS(time_reconstruct(sys, psi0, bad, {-5.0, 5.0, 20001}, opts),
                  Error);
}

TEST_CASE("reconstruction output is byte-stable across thread counts") {
  MultiChannelSystem sys = free_driver();
  sys.channels = {{PotentialSpec::constant(0.5, 1.0), Complex(0.4), 0.0}};
  const std::vector<double> grid = linspace(-14.0, 6.0, 401);
  const WaveField psi0 = make_gaussian_packet(-5.0, 1.1, 1.3, grid);
  const std::vector<double> times = linspace(0.0, 3.0, 7);
  const FrequencyGrid freq{-6.0, 12.0, 9001};
  TimeReconstructOptions opts;
  opts.eta = 4e-3;
  opts.threads = 1;
  const TimeDomainResult a = time_reconstruct(sys, psi0, times, freq, opts);
  opts.threads = 5;
  const TimeDomainResult b = time_reconstruct(sys, psi0, times, freq, opts);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(a.amplitude[k].real() == b.amplitude[k].real());
    CHECK(a.amplitude[k].imag() == b.amplitude[k].imag());
  }
}
