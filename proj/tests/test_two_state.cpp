#include <doctest.h>

#include <cmath>
#include <complex>

#include "crosskit/oracle.hpp"
#include "crosskit/two_state.hpp"

using namespace crosskit;

namespace {

// both channels free, unit coupling at the origin: at E = 1/2 every block is
// an exact rational
TwoChannelSystem symmetric_pair() {
  TwoChannelSystem sys;
  sys.channel1 = PotentialSpec::constant(0.0, 1.0);
  sys.channel2 = PotentialSpec::constant(0.0, 1.0);
  sys.coupling = {1.0, 0.0};
  return sys;
}

MultiChannelSystem as_multi(const TwoChannelSystem& sys) {
  MultiChannelSystem ms;
  ms.driver = sys.channel1;
  ms.channels = {{sys.channel2, Complex(sys.coupling.strength, 0.0),
                  sys.coupling.location}};
  return ms;
}

}  // namespace

TEST_CASE("symmetric pair has exact rational blocks at E = 1/2") {
  const TwoChannelSystem sys = symmetric_pair();
  const EnergyPoint w{0.5, 0.0};
  CHECK(std::abs(denominator(w, sys) - Complex(2.0, 0.0)) < 1e-14);
  CHECK(std::abs(dressed_green(GreenBlock::G11, 0.0, 0.0, w, sys) -
                 Complex(0.0, -0.5)) < 1e-14);
  CHECK(std::abs(dressed_green(GreenBlock::G12, 0.0, 0.0, w, sys) -
                 Complex(-0.5, 0.0)) < 1e-14);
  CHECK(std::abs(dressed_green(GreenBlock::G21, 0.0, 0.0, w, sys) -
                 dressed_green(GreenBlock::G12, 0.0, 0.0, w, sys)) < 1e-14);

  const ScatterResult res = scatter_two(0.5, sys);
  CHECK(res.R == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(res.T == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(res.transfer[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(res.flux_sum == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("dressed blocks are symmetric in the arguments") {
  TwoChannelSystem sys = symmetric_pair();
  sys.channel2 = PotentialSpec::constant(0.8, 1.0);
  sys.coupling = {0.7, -0.4};
  const EnergyPoint w{1.3, 0.2};
  const Complex ab = dressed_green(GreenBlock::G11, -0.9, 1.4, w, sys);
  const Complex ba = dressed_green(GreenBlock::G11, 1.4, -0.9, w, sys);
  CHECK(std::abs(ab - ba) < 1e-13 * std::abs(ab));
  // off-diagonal blocks swap under transposition
  const Complex g12 = dressed_green(GreenBlock::G12, -0.9, 1.4, w, sys);
  const Complex g21 = dressed_green(GreenBlock::G21, 1.4, -0.9, w, sys);
  CHECK(std::abs(g12 - g21) < 1e-13 * std::abs(g12));
}

TEST_CASE("scattering agrees with the matching oracle") {
  TwoChannelSystem sys;
  SUBCASE("open-open") {
    sys.channel1 = PotentialSpec::constant(-0.3, 1.3);
    sys.channel2 = PotentialSpec::constant(0.4, 1.3);
    sys.coupling = {0.9, 0.6};
  }
  SUBCASE("open-closed") {
    sys.channel1 = PotentialSpec::constant(0.0, 0.7);
    sys.channel2 = PotentialSpec::constant(2.5, 0.7);
    sys.coupling = {-1.4, -1.1};
  }
  const double e = 1.7;
  const ScatterResult a = scatter_two(e, sys);
  const ScatterResult b = matching_solve(as_multi(sys), e);
  CHECK(std::abs(a.R - b.R) < 1e-12);
  CHECK(std::abs(a.T - b.T) < 1e-12);
  CHECK(std::abs(a.transfer[0] - b.transfer[0]) < 1e-12);
  CHECK(a.flux_sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scattering guards its preconditions") {
  TwoChannelSystem sys = symmetric_pair();
  sys.channel1 = PotentialSpec::constant(1.0, 1.0);
  CHECK_THROWS_AS(scatter_two(0.5, sys), Error);  // entrance closed

  sys = symmetric_pair();
  sys.channel2 = PotentialSpec::linear(0.0, 0.3, 1.0);
  CHECK_THROWS_AS(scatter_two(0.5, sys), Error);  // no plane-wave asymptotics

  sys = symmetric_pair();
  sys.convention = GreenConvention::Principal;
  CHECK_THROWS_AS(scatter_two(0.5, sys), Error);

  sys = symmetric_pair();
  sys.channel2 = PotentialSpec::constant(0.0, 2.0);
  CHECK_THROWS_AS(scatter_two(0.5, sys), Error);  // mass mismatch
}

TEST_CASE("dressed green refuses an exact pole") {
  TwoChannelSystem sys = symmetric_pair();  // D = 1 - 1/kappa^2
  CHECK_THROWS_AS(
      dressed_green(GreenBlock::G11, 0.0, 0.0, EnergyPoint{-0.5, 0.0}, sys),
      Error);
}

TEST_CASE("pole scan finds the symmetric bound state") {
  const TwoChannelSystem sys = symmetric_pair();
  const ScanRegion region{-2.0, -0.01, -0.3, 0.05};
  const auto poles = resonance_scan(region, sys);
  bool found = false;
  for (const PoleCandidate& p : poles) {
    if (!p.converged) continue;
    if (std::abs(p.omega - Complex(-0.5, 0.0)) < 1e-8) {
      found = true;
      CHECK(std::abs(p.omega.imag()) < 1e-10);
      CHECK(p.abs_denominator < 1e-10);
      // D = 1 + 1/(2 omega), so the residue of 1/D at -1/2 is -1/2
      CHECK(std::abs(p.residue - Complex(-0.5, 0.0)) < 1e-6);
    }
  }
  CHECK(found);
}

TEST_CASE("pole scan rejects a degenerate grid") {
  const TwoChannelSystem sys = symmetric_pair();
  CHECK_THROWS_AS(resonance_scan({-1.0, -0.5, -0.1, 0.0}, sys, 2, 2), Error);
}
