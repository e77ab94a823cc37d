#include "crosskit/two_state.hpp"

#include <algorithm>
#include <cmath>

#include "crosskit/errors.hpp"

namespace crosskit {

namespace {

constexpr char kModule[] = "two_state";

const Complex kI{0.0, 1.0};

struct Pair {
  GreenEvaluator g1;
  GreenEvaluator g2;
};

Pair make_pair(const TwoChannelSystem& sys) {
  if (sys.channel1.mass != sys.channel2.mass)
    throw Error(ErrorKind::InvalidPotential, kModule,
                "channels must share one mass");
  return {GreenEvaluator::for_potential(sys.channel1, sys.convention,
                                        sys.numeric_step),
          GreenEvaluator::for_potential(sys.channel2, sys.convention,
                                        sys.numeric_step)};
}

Complex denominator_at(const Pair& g, EnergyPoint omega,
                       const TwoChannelSystem& sys) {
  const double xc = sys.coupling.location;
  const double k0 = sys.coupling.strength;
  return 1.0 - k0 * k0 * g.g1(xc, xc, omega) * g.g2(xc, xc, omega);
}

}  // namespace

Complex denominator(EnergyPoint omega, const TwoChannelSystem& sys) {
  const Pair g = make_pair(sys);
  return denominator_at(g, omega, sys);
}

Complex dressed_green(GreenBlock block, double x, double x0, EnergyPoint omega,
                      const TwoChannelSystem& sys) {
  const Pair g = make_pair(sys);
  const double xc = sys.coupling.location;
  const double k0 = sys.coupling.strength;
  const Complex d = denominator_at(g, omega, sys);
  if (std::abs(d) <= 1e-14)
    throw Error(ErrorKind::PoleError, kModule,
                "energy sits on a pole of the dressed resolvent");
  switch (block) {
    case GreenBlock::G11:
      return g.g1(x, x0, omega) + k0 * k0 * g.g1(x, xc, omega) *
                                      g.g2(xc, xc, omega) *
                                      g.g1(xc, x0, omega) / d;
    case GreenBlock::G22:
      return g.g2(x, x0, omega) + k0 * k0 * g.g2(x, xc, omega) *
                                      g.g1(xc, xc, omega) *
                                      g.g2(xc, x0, omega) / d;
    case GreenBlock::G12:
      return k0 * g.g1(x, xc, omega) * g.g2(xc, x0, omega) / d;
    case GreenBlock::G21:
      return k0 * g.g2(x, xc, omega) * g.g1(xc, x0, omega) / d;
  }
  throw Error(ErrorKind::DomainError, kModule, "unknown block");
}

ScatterResult scatter_two(double E, const TwoChannelSystem& sys) {
  if (sys.channel1.kind != PotentialKind::Constant ||
      sys.channel2.kind != PotentialKind::Constant)
    throw Error(ErrorKind::NonConstantAsymptotics, kModule,
                "scattering amplitudes need constant channel potentials");
  if (sys.convention != GreenConvention::Retarded)
    throw Error(ErrorKind::DomainError, kModule,
                "scattering amplitudes need the retarded convention");
  if (sys.channel1.mass != sys.channel2.mass)
    throw Error(ErrorKind::InvalidPotential, kModule,
                "channels must share one mass");
  const double m = sys.channel1.mass;
  const double v1 = sys.channel1.v0;
  const double v2 = sys.channel2.v0;
  if (!(E > v1))
    throw Error(ErrorKind::ClosedEntranceChannel, kModule,
                "entrance channel is closed at this energy");

  const double xc = sys.coupling.location;
  const double k0 = sys.coupling.strength;
  const EnergyPoint omega{E, 0.0};
  const double k1 = std::sqrt(2.0 * m * (E - v1));
  const Complex k2 = momentum(Complex(omega), v2, m);
  const bool open2 = E > v2;

  const Complex g2c = green_constant(xc, xc, omega, sys.channel2,
                                     GreenConvention::Retarded);
  const Complex d = 1.0 - k0 * k0 *
                              green_constant(xc, xc, omega, sys.channel1,
                                             GreenConvention::Retarded) *
                              g2c;
  if (std::abs(d) <= 1e-14)
    throw Error(ErrorKind::PoleError, kModule,
                "scattering energy sits on a dressed pole");

  // psi1 = exp(i k1 x) + A exp(i k1 |x - xc| + i k1 xc),
  // psi2 = q exp(i k2 |x - xc|)
  const Complex a = m / (kI * k1) * k0 * k0 * g2c / d;
  const Complex q = k0 * m / (kI * k2) * std::exp(kI * k1 * xc) / d;

  ScatterResult res;
  res.t = 1.0 + a;
  res.r = a * std::exp(2.0 * kI * k1 * xc);
  res.T = std::norm(res.t);
  res.R = std::norm(res.r);
  const Complex b_amp = q * std::exp(kI * k2 * xc);
  const Complex c_amp = q * std::exp(-kI * k2 * xc);
  res.channel_amplitudes.push_back({b_amp, c_amp});
  res.transfer.push_back(
      open2 ? k2.real() / k1 * (std::norm(b_amp) + std::norm(c_amp)) : 0.0);
  res.flux_sum = res.R + res.T + res.transfer[0];
  return res;
}

std::vector<PoleCandidate> resonance_scan(const ScanRegion& region,
                                          const TwoChannelSystem& sys,
                                          int grid_re, int grid_im) {
  if (grid_re < 3 || grid_im < 3)
    throw Error(ErrorKind::DomainError, kModule,
                "scan grid needs at least 3 points per axis");
  if (!(region.re_min < region.re_max) || !(region.im_min < region.im_max))
    throw Error(ErrorKind::DomainError, kModule, "empty scan region");

  const Pair g = make_pair(sys);
  auto dvalue = [&](Complex w) {
    return denominator_at(g, EnergyPoint{w.real(), w.imag()}, sys);
  };

  const double dre = (region.re_max - region.re_min) / (grid_re - 1);
  const double dim = (region.im_max - region.im_min) / (grid_im - 1);
  std::vector<double> mag(static_cast<std::size_t>(grid_re) * grid_im);
  for (int j = 0; j < grid_im; ++j)
    for (int i = 0; i < grid_re; ++i) {
      const Complex w{region.re_min + i * dre, region.im_min + j * dim};
      mag[static_cast<std::size_t>(j) * grid_re + i] = std::abs(dvalue(w));
    }
  auto at = [&](int i, int j) {
    return mag[static_cast<std::size_t>(j) * grid_re + i];
  };

  std::vector<PoleCandidate> out;
  for (int j = 1; j + 1 < grid_im; ++j)
    for (int i = 1; i + 1 < grid_re; ++i) {
      const double c = at(i, j);
      bool minimal = true;
      for (int dj = -1; dj <= 1 && minimal; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          if (at(i + di, j + dj) < c) {
            minimal = false;
            break;
          }
        }
      if (!minimal) continue;

      Complex w{region.re_min + i * dre, region.im_min + j * dim};
      Complex d = dvalue(w);
      bool converged = false;
      for (int it = 0; it < 50; ++it) {
        const double step = 1e-6 * std::max(1.0, std::abs(w));
        const Complex slope =
            (dvalue(w + step) - dvalue(w - step)) / (2.0 * step);
        if (slope == Complex(0.0)) break;
        w -= d / slope;
        d = dvalue(w);
        if (std::abs(d) <= 1e-10) {
          converged = true;
          break;
        }
      }
      PoleCandidate cand;
      cand.omega = w;
      cand.abs_denominator = std::abs(d);
      cand.converged = converged;
      // the residue of 1/D needs D' at the converged point, not at the
      // iterate the last Newton step was taken from
      const double step = 1e-6 * std::max(1.0, std::abs(w));
      const Complex dprime =
          (dvalue(w + step) - dvalue(w - step)) / (2.0 * step);
      if (dprime != Complex(0.0)) cand.residue = 1.0 / dprime;
      bool dup = false;
      for (PoleCandidate& prev : out)
        if (std::abs(prev.omega.real() - w.real()) < dre &&
            std::abs(prev.omega.imag() - w.imag()) < dim) {
          if (cand.abs_denominator < prev.abs_denominator) prev = cand;
          dup = true;
          break;
        }
      if (!dup) out.push_back(cand);
    }
  return out;
}

}  // namespace crosskit
