#pragma once

#include <array>
#include <vector>

#include "crosskit/multichannel.hpp"
#include "crosskit/types.hpp"

namespace crosskit {

// Piecewise plane-wave matching of the coupled stationary problem. Solves
// for segment coefficients of the driver wave and one outgoing amplitude per
// channel, so it shares no algebra with the resolvent-based routes.
ScatterResult matching_solve(const MultiChannelSystem& sys, double E);

// Delta coupling smeared to a grid-normalized Gaussian of width sigma
struct RegularizedCoupling {
  double strength = 0.0;
  double location = 0.0;
  double width = 0.0;
};

struct PropagationConfig {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t points = 0;      // periodic grid size
  double dt = 0.0;
  double t_max = 0.0;
  std::size_t sample_stride = 1;
  double absorber_width = 0.0;    // 0 disables the edge absorber
  double absorber_strength = 0.0;  // loss rate at the boundary
};

struct PropagationResult {
  std::vector<double> times;
  std::vector<std::vector<double>> populations;  // [channel][sample]
  std::vector<double> survival;  // |<psi0 | psi_driver(t)>|^2
  double norm_drift = 0.0;
};

// Strang-split propagation of the regularized coupled system; the coupling
// list replaces the system's delta couplings channel by channel
PropagationResult split_operator_propagate(
    const MultiChannelSystem& sys,
    const std::vector<RegularizedCoupling>& couplings, const WaveField& psi0,
    const PropagationConfig& cfg);

struct WidthPoint {
  double sigma;
  double value;
};

struct Extrapolated {
  double value = 0.0;
  double error = 0.0;    // spread of the last two extrapolants
  bool monotone = true;  // successive differences shrank
};

// Quadratic Richardson extrapolation in sigma^2 to the zero-width limit
Extrapolated delta_width_extrapolate(const std::array<WidthPoint, 3>& pts);

}  // namespace crosskit
