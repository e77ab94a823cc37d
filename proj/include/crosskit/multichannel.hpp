#pragma once

#include <Eigen/Dense>
#include <vector>

#include "crosskit/greens_core.hpp"
#include "crosskit/types.hpp"

namespace crosskit {

struct ChannelSpec {
  PotentialSpec potential;
  Complex strength;  // coupling K in V = K delta(x - point)
  double point = 0.0;
};

struct MultiChannelSystem {
  PotentialSpec driver;  // the channel carrying source and asymptotics
  std::vector<ChannelSpec> channels;
  GreenConvention convention = GreenConvention::Retarded;
  double numeric_step = 0.01;
};

struct EffectiveWeight {
  std::size_t channel;
  Complex weight;  // K^2 G_channel(point, point; omega)
};

std::vector<EffectiveWeight> effective_weights(EnergyPoint omega,
                                               const MultiChannelSystem& sys);

// Driver-channel resolvent with every coupled channel folded in, frozen at
// one frequency:
//   G''(x, x0) = G0(x, x0) + sum_pq G0(x, y_p) S_pq G0(y_q, x0)
// over the coupling points y. Copies are cheap and evaluation is thread-safe.
class DressedGreen {
 public:
  Complex operator()(double x, double x0) const;

  EnergyPoint omega() const { return omega_; }
  const std::vector<double>& correction_points() const { return points_; }
  const Eigen::MatrixXcd& correction_matrix() const { return matrix_; }
  const GreenEvaluator& driver() const { return driver_; }
  // condition estimate of the dressing solve (1 for the staged recursion)
  double condition() const { return condition_; }
  bool ill_conditioned() const { return condition_ > 1e12; }

  DressedGreen(GreenEvaluator driver, EnergyPoint omega,
               std::vector<double> points, Eigen::MatrixXcd matrix,
               double condition);

 private:
  GreenEvaluator driver_;
  EnergyPoint omega_;
  std::vector<double> points_;
  Eigen::MatrixXcd matrix_;
  double condition_ = 1.0;
};

// Staged one-channel-at-a-time recursion; exact for any channel order
DressedGreen dress_sequential(const MultiChannelSystem& sys,
                              EnergyPoint omega);

// One dense solve (I - A W) g = b over the coupling points; channels
// attached to exactly equal points are merged before assembly
DressedGreen dress_direct(const MultiChannelSystem& sys, EnergyPoint omega);

// Wave in channel eps generated by the dressed driver wave at the coupling
// point: psi_eps(x) = K_eps G_eps(x, x_eps) psi1(x_eps)
Complex channel_amplitude(std::size_t eps, double x, EnergyPoint omega,
                          const MultiChannelSystem& sys, Complex psi1_at_point);

// Plane wave incident from the left in the driver channel; constant
// potentials and real couplings only
ScatterResult scatter_multi(double E, const MultiChannelSystem& sys);

struct WaveField {
  std::size_t component = 0;  // 0 = driver channel
  std::vector<double> grid;   // uniform positions
  std::vector<Complex> values;
  double tag = 0.0;  // time label
};

WaveField make_gaussian_packet(double center, double sigma, double k0,
                               const std::vector<double>& grid);

struct FrequencyGrid {
  double omega_min = 0.0;
  double omega_max = 0.0;
  std::size_t count = 0;
};

struct TimeReconstructOptions {
  double eta = 1e-3;  // contour height above the real axis
  int threads = 1;
  std::vector<double> field_times;  // times at which to synthesize the wave
};

struct TimeDomainResult {
  std::vector<double> times;
  std::vector<Complex> amplitude;  // a(t) = <psi0 | psi1(t)>
  std::vector<double> survival;    // |a(t)|^2
  double reference_energy = 0.0;   // <psi0|H|psi0> / <psi0|psi0>
  std::vector<WaveField> fields;   // driver wave at the requested field times
};

// Survival amplitude from the frequency side: psi1(x, omega + i eta) is
// integrated against psi0 along the shifted contour, with the leading
// 1/(omega - E_ref) pole handled in closed form so short times come out
// exact instead of halved.
TimeDomainResult time_reconstruct(const MultiChannelSystem& sys,
                                  const WaveField& psi0,
                                  const std::vector<double>& times,
                                  const FrequencyGrid& grid,
                                  const TimeReconstructOptions& opts = {});

}  // namespace crosskit
