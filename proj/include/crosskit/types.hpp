#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "crosskit/errors.hpp"

namespace crosskit {

using Complex = std::complex<double>;

// Complex frequency omega = E + i*eta. Retarded evaluation takes eta >= 0;
// eta < 0 is reserved for pole searches in the lower half plane.
struct EnergyPoint {
  double re = 0.0;
  double im = 0.0;

  EnergyPoint() = default;
  EnergyPoint(double real, double imag = 0.0) : re(real), im(imag) {}
  EnergyPoint(Complex z) : re(z.real()), im(z.imag()) {}

  Complex value() const { return {re, im}; }
  operator Complex() const { return value(); }
};

enum class PotentialKind { Constant, Linear, Sampled };

// One diabatic potential curve, hbar = 1 units; mass rides along because every
// Green's function needs it.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::Constant;
  double v0 = 0.0;     // energy offset
  double slope = 0.0;  // Linear only
  std::vector<std::pair<double, double>> samples;  // Sampled only, (x, V)
  double mass = 1.0;

  static PotentialSpec constant(double v0, double mass = 1.0);
  static PotentialSpec linear(double v0, double slope, double mass = 1.0);
  static PotentialSpec sampled(std::vector<std::pair<double, double>> samples,
                               double mass = 1.0);
};

inline PotentialSpec PotentialSpec::constant(double v0, double mass) {
  if (!(mass > 0.0))
    throw Error(ErrorKind::InvalidPotential, "greens_core", "mass must be > 0");
  PotentialSpec p;
  p.kind = PotentialKind::Constant;
  p.v0 = v0;
  p.mass = mass;
  return p;
}

inline PotentialSpec PotentialSpec::linear(double v0, double slope,
                                           double mass) {
  if (!(mass > 0.0))
    throw Error(ErrorKind::InvalidPotential, "greens_core", "mass must be > 0");
  PotentialSpec p;
  p.kind = PotentialKind::Linear;
  p.v0 = v0;
  p.slope = slope;
  p.mass = mass;
  return p;
}

inline PotentialSpec PotentialSpec::sampled(
    std::vector<std::pair<double, double>> samples, double mass) {
  if (!(mass > 0.0))
    throw Error(ErrorKind::InvalidPotential, "greens_core", "mass must be > 0");
  if (samples.size() < 3)
    throw Error(ErrorKind::InvalidPotential, "greens_core",
                "sampled potential needs at least 3 points");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].first > samples[i - 1].first))
      throw Error(ErrorKind::InvalidPotential, "greens_core",
                  "sample positions must be strictly increasing");
  PotentialSpec p;
  p.kind = PotentialKind::Sampled;
  p.samples = std::move(samples);
  p.mass = mass;
  return p;
}

// Retarded: outgoing-wave kernel, coincident value -i*m/k (open), -m/kappa
// (closed). Principal: the literal principal-branch form sqrt(m/(2(omega-v0)))
// at coincident points; only defined for constant channels.
enum class GreenConvention { Retarded, Principal };

// Scattering amplitudes and flux-normalized probabilities for a plane wave
// entering on the driver channel from the left.
struct ScatterResult {
  Complex r{};  // driver reflection amplitude
  Complex t{};  // driver transmission amplitude
  double R = 0.0;
  double T = 0.0;
  std::vector<double> transfer;  // per coupled channel, 0 when closed
  // outgoing amplitude toward -inf / +inf on each coupled channel
  std::vector<std::pair<Complex, Complex>> channel_amplitudes;
  double flux_sum = 0.0;  // R + T + sum(transfer); 1 when flux is conserved

  double transfer_total() const {
    double s = 0.0;
    for (double v : transfer) s += v;
    return s;
  }
};

}  // namespace crosskit
