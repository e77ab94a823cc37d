#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "crosskit/greens_core.hpp"
#include "crosskit/util.hpp"

using namespace crosskit;

namespace {

const PotentialSpec kFree = PotentialSpec::constant(0.0, 1.0);

PotentialSpec sampled_linear(double v0, double slope) {
  std::vector<std::pair<double, double>> rows;
  for (int i = 0; i <= 400; ++i) {
    const double x = -10.0 + 0.05 * i;
    rows.emplace_back(x, v0 + slope * x);
  }
  return PotentialSpec::sampled(std::move(rows), 1.0);
}

// Dirichlet box on [0, L]: the spectral sum has a closed form to converge to
Complex box_green_closed(double x, double x0, Complex omega, double L,
                         double m) {
  const Complex k = std::sqrt(2.0 * m * omega);
  const double lo = std::min(x, x0);
  const double hi = std::max(x, x0);
  return -2.0 * m * std::sin(k * lo) * std::sin(k * (L - hi)) /
         (k * std::sin(k * L));
}

}  // namespace

TEST_CASE("momentum stays on the decaying branch") {
  CHECK(momentum(Complex(2.0, 0.0), 0.0, 1.0) == Complex(2.0, 0.0));
  const Complex closed = momentum(Complex(-0.5, 0.0), 0.0, 1.0);
  CHECK(closed.real() == doctest::Approx(0.0));
  CHECK(closed.imag() == doctest::Approx(1.0));
  CHECK(momentum(Complex(1.0, 0.3), 0.0, 1.0).imag() > 0.0);
}

TEST_CASE("continued momentum crosses the axis below threshold") {
  const Complex above = momentum(Complex(-1.0, 1e-8), 0.0, 1.0);
  const Complex below = momentum_continued(Complex(-1.0, -1e-8), 0.0, 1.0);
  CHECK(std::abs(below - above) < 1e-7);
  // the principal branch itself jumps by 2 sqrt(2) there
  const Complex principal = momentum(Complex(-1.0, -1e-8), 0.0, 1.0);
  CHECK(std::abs(principal - above) > 2.0);
  // above the real axis both agree
  CHECK(momentum_continued(Complex(3.0, 0.5), 0.0, 1.0) ==
        momentum(Complex(3.0, 0.5), 0.0, 1.0));
}

TEST_CASE("constant-potential kernel closed forms") {
  const Complex open =
      green_constant(0.0, 0.0, {0.5, 0.0}, kFree, GreenConvention::Retarded);
  CHECK(std::abs(open - Complex(0.0, -1.0)) < 1e-14);

  const Complex closed =
      green_constant(0.0, 0.0, {-0.5, 0.0}, kFree, GreenConvention::Retarded);
  CHECK(std::abs(closed - Complex(-1.0, 0.0)) < 1e-14);

  const Complex apart =
      green_constant(-0.3, 0.9, {0.5, 0.0}, kFree, GreenConvention::Retarded);
  CHECK(std::abs(apart - Complex(0.0, -1.0) * std::exp(Complex(0.0, 1.2))) <
        1e-14);

  CHECK(std::abs(green_constant(0.0, 0.0, {0.5, 0.0}, kFree,
                                GreenConvention::Principal) -
                 Complex(1.0, 0.0)) < 1e-14);
  CHECK(std::abs(green_constant(0.0, 0.0, {-0.5, 0.0}, kFree,
                                GreenConvention::Principal) -
                 Complex(0.0, 1.0)) < 1e-14);

  CHECK_THROWS_AS(green_constant(0.0, 0.0, {0.0, 0.0}, kFree,
                                 GreenConvention::Retarded),
                  Error);
}

TEST_CASE("airy and numerov kernels agree on a linear potential") {
  const PotentialSpec lin = PotentialSpec::linear(0.2, 0.7, 1.0);
  const GreenEvaluator ga = GreenEvaluator::linear(lin);
  const GreenEvaluator gn = GreenEvaluator::numeric(sampled_linear(0.2, 0.7),
                                                    0.01);
  const EnergyPoint omegas[] = {{1.1, 0.0}, {0.7, 0.25}, {-0.4, 0.6}};
  const std::pair<double, double> probes[] = {{-1.3, 0.9}, {0.1, 0.1},
                                              {2.4, -0.8}};
  for (const EnergyPoint w : omegas)
    for (const auto& [x, x0] : probes) {
      const Complex a = ga(x, x0, w);
      const Complex n = gn(x, x0, w);
      CAPTURE(w.re);
      CAPTURE(x);
      CHECK(std::abs(a - n) <= 1e-6 * std::abs(a));
    }
}

TEST_CASE("negative slope is handled by mirroring") {
  const GreenEvaluator ga =
      GreenEvaluator::linear(PotentialSpec::linear(0.2, -0.7, 1.0));
  const GreenEvaluator gn = GreenEvaluator::numeric(sampled_linear(0.2, -0.7),
                                                    0.01);
  const Complex a = ga(-0.9, 1.2, {0.8, 0.15});
  const Complex n = gn(-0.9, 1.2, {0.8, 0.15});
  CHECK(std::abs(a - n) <= 1e-6 * std::abs(a));
  // mirror symmetry against the rising-slope kernel
  const GreenEvaluator gr =
      GreenEvaluator::linear(PotentialSpec::linear(0.2, 0.7, 1.0));
  CHECK(std::abs(a - gr(0.9, -1.2, {0.8, 0.15})) <= 1e-12 * std::abs(a));
}

TEST_CASE("kernels are symmetric in their arguments") {
  const GreenEvaluator evals[] = {
      GreenEvaluator::constant(PotentialSpec::constant(0.3, 1.4)),
      GreenEvaluator::linear(PotentialSpec::linear(0.1, 0.5, 0.8)),
      GreenEvaluator::numeric(sampled_linear(0.1, 0.4), 0.01)};
  for (const GreenEvaluator& g : evals) {
    const Complex ab = g(-0.7, 1.1, {0.9, 0.2});
    const Complex ba = g(1.1, -0.7, {0.9, 0.2});
    CHECK(std::abs(ab - ba) <= 1e-10 * std::abs(ab));
  }
}

TEST_CASE("spectral sum converges to the box kernel") {
  const double L = 3.0;
  const double m = 1.0;
  const double x = 0.7, x0 = 1.9;
  const Complex omega(1.3, 0.4);
  std::vector<EigenPair> pairs;
  for (int n = 1; n <= 4000; ++n) {
    const double kn = n * M_PI / L;
    const double en = kn * kn / (2.0 * m);
    const double norm = std::sqrt(2.0 / L);
    pairs.push_back({en, norm * std::sin(kn * x), norm * std::sin(kn * x0)});
  }
  const Complex sum = green_spectral(pairs, EnergyPoint(omega));
  const Complex ref = box_green_closed(x, x0, omega, L, m);
  CHECK(std::abs(sum - ref) <= 1e-6 * std::abs(ref));
}

TEST_CASE("spectral sum rejects an on-shell real frequency") {
  std::vector<EigenPair> pairs = {{1.0, 0.3, 0.4}, {2.5, 0.1, -0.2}};
  CHECK_THROWS_AS(green_spectral(pairs, EnergyPoint{2.5, 0.0}), Error);
  CHECK_NOTHROW(green_spectral(pairs, EnergyPoint{2.5, 1e-6}));
}

TEST_CASE("evaluator dispatch follows the potential kind") {
  CHECK(GreenEvaluator::for_potential(kFree, GreenConvention::Retarded)
            .method() == GreenMethod::ClosedFormConstant);
  CHECK(GreenEvaluator::for_potential(PotentialSpec::linear(0.0, 1.0, 1.0),
                                      GreenConvention::Retarded)
            .method() == GreenMethod::AiryLinear);
  CHECK(GreenEvaluator::for_potential(sampled_linear(0.0, 0.3),
                                      GreenConvention::Retarded)
            .method() == GreenMethod::NumericWronskian);
  CHECK_THROWS_AS(GreenEvaluator::for_potential(
                      PotentialSpec::linear(0.0, 1.0, 1.0),
                      GreenConvention::Principal),
                  Error);
}

TEST_CASE("numeric kernel rejects probes outside the samples") {
  const GreenEvaluator g = GreenEvaluator::numeric(sampled_linear(0.0, 0.3),
                                                   0.01);
  CHECK_THROWS_AS(g(-11.0, 0.0, {0.5, 0.1}), Error);
  CHECK_THROWS_AS(g(0.0, 10.5, {0.5, 0.1}), Error);
}

TEST_CASE("cubic spline reproduces cubics exactly") {
  std::vector<double> xs, ys;
  auto poly = [](double x) { return 0.3 - 1.2 * x + 0.7 * x * x - 0.25 * x * x * x; };
  for (int i = 0; i <= 12; ++i) {
    const double x = -2.0 + i * (4.0 / 12.0);
    xs.push_back(x);
    ys.push_back(poly(x));
  }
  const CubicSpline s(xs, ys);
  for (double x = -1.97; x < 1.98; x += 0.173)
    CHECK(s(x) == doctest::Approx(poly(x)).epsilon(1e-12));
}
