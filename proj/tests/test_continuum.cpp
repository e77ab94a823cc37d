#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "crosskit/continuum.hpp"
#include "crosskit/util.hpp"

using namespace crosskit;

namespace {

ContinuumSystem exponential_system(double amplitude,
                                   GreenConvention conv =
                                       GreenConvention::Retarded) {
  ContinuumSystem sys;
  sys.driver = PotentialSpec::constant(0.0, 1.0);
  sys.kernel = CouplingKernel::exponential(amplitude);
  sys.convention = conv;
  return sys;
}

}  // namespace

TEST_CASE("exponential kernel integrates to amplitude times omega") {
  for (const GreenConvention conv :
       {GreenConvention::Retarded, GreenConvention::Principal}) {
    const ContinuumSystem sys = exponential_system(0.3, conv);
    for (const EnergyPoint w : {EnergyPoint{2.0, 0.0}, EnergyPoint{0.7, 0.4},
                                EnergyPoint{1.2, -0.15}}) {
      const Complex v = effective_potential(w, sys);
      const Complex ref = analytic_special_value(w, 0.3);
      CAPTURE(w.re);
      CHECK(std::abs(v - ref) <= 1e-8 * std::abs(ref));
    }
  }
}

TEST_CASE("exponential kernel needs a decaying tail") {
  const ContinuumSystem sys = exponential_system(0.3);
  CHECK_THROWS_AS(effective_potential(EnergyPoint{-1.0, 0.2}, sys), Error);
}

TEST_CASE("flat tabulated kernel matches its antiderivative") {
  // k^2 = c on [0, 2]: V = -i c sqrt(2m) (sqrt(w) - sqrt(w - 2)) for the
  // retarded family at unit mass
  const double c = 0.4;
  ContinuumSystem sys;
  sys.driver = PotentialSpec::constant(0.0, 1.0);
  sys.kernel = CouplingKernel::tabulated({{0.0, c}, {2.0, c}});

  SUBCASE("complex frequency") {
    const Complex w(1.0, 0.5);
    const Complex ref = c * Complex(0.0, -1.0) * std::sqrt(2.0) *
                        (std::sqrt(w) - std::sqrt(w - 2.0));
    const Complex v = effective_potential(EnergyPoint(w), sys);
    CHECK(std::abs(v - ref) <= 1e-8 * std::abs(ref));
  }
  SUBCASE("real frequency inside the band") {
    const double w = 1.3;
    const Complex ref =
        c * (Complex(0.0, -1.0) * std::sqrt(2.0 * w) -
             Complex(std::sqrt(2.0 * (2.0 - w)), 0.0));
    const Complex v = effective_potential(EnergyPoint{w, 0.0}, sys);
    CHECK(std::abs(v - ref) <= 1e-8 * std::abs(ref));
  }
}

TEST_CASE("tabulated kernel text parsing") {
  const CouplingKernel k = CouplingKernel::tabulated_from_text(
      "# density samples\n0.0 0.4\n1.0 0.3\n\n2.5 0.0\n");
  REQUIRE(k.table.size() == 3);
  CHECK(k.table[1].second == doctest::Approx(0.3));
  CHECK_THROWS_AS(CouplingKernel::tabulated_from_text("0.0 0.4\n"), Error);
  CHECK_THROWS_AS(CouplingKernel::tabulated_from_text("0 0.4\n1 bad\n"),
                  Error);
  CHECK_THROWS_AS(CouplingKernel::tabulated_from_text("1 0.4\n1 0.5\n"),
                  Error);
  CHECK_THROWS_AS(CouplingKernel::tabulated_from_text("0 0.4\n1 -0.5\n"),
                  Error);
}

TEST_CASE("point dressing reproduces the rational example") {
  const GreenEvaluator g = GreenEvaluator::constant(
      PotentialSpec::constant(0.0, 1.0));
  // G0 = -i at k = 1; a weight of 1/2 gives G'' = -0.4 - 0.8i
  const Complex v = dressed_point_green(0.0, 0.0, EnergyPoint{0.5, 0.0}, g,
                                        0.0, Complex(0.5, 0.0));
  CHECK(std::abs(v - Complex(-0.4, -0.8)) < 1e-14);
  // 1 - V G(a,a) = 0 at V = 1/G
  CHECK_THROWS_AS(dressed_point_green(0.0, 0.0, EnergyPoint{0.5, 0.0}, g, 0.0,
                                      Complex(0.0, 1.0)),
                  Error);
}

TEST_CASE("continuum dressing composes the effective potential") {
  const ContinuumSystem sys = exponential_system(0.3);
  const EnergyPoint w{2.0, 0.0};
  const Complex direct = dressed_continuum_green(-0.4, 0.7, w, sys);
  const GreenEvaluator g = GreenEvaluator::constant(sys.driver);
  const Complex composed = dressed_point_green(
      -0.4, 0.7, w, g, sys.attach_point, effective_potential(w, sys));
  CHECK(std::abs(direct - composed) < 1e-12 * std::abs(direct));
}

TEST_CASE("discretization converges and guards its inputs") {
  const ContinuumSystem sys = exponential_system(0.3);
  const EnergyPoint w{2.0, 0.0};
  const Complex ref = analytic_special_value(w, 0.3);

  double prev = 1e300;
  for (const std::size_t n : {32u, 128u, 512u}) {
    const MultiChannelSystem d = discretize_continuum(sys, n, 32.0, w);
    REQUIRE(d.channels.size() == n);
    CompensatedComplexSum sum;
    for (const auto& ew : effective_weights(w, d)) sum.add(ew.weight);
    const double err = std::abs(sum.value() - ref);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev <= 1e-2 * std::abs(ref));

  CHECK_NOTHROW(discretize_continuum(sys, 1, 32.0, w));
  CHECK_THROWS_AS(discretize_continuum(sys, 0, 32.0, w), Error);
  // a cutoff at 2 omega leaves an exponential tail far above the tolerance
  CHECK_THROWS_AS(discretize_continuum(sys, 64, 4.0, w), Error);
}
