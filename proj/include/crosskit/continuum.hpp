#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "crosskit/greens_core.hpp"
#include "crosskit/multichannel.hpp"
#include "crosskit/types.hpp"

namespace crosskit {

enum class KernelForm { Exponential, Tabulated };

// Squared coupling density k^2(eps) of a continuum of constant channels.
// The exponential form is built reciprocally against the coincident channel
// Green's function, so its effective potential integrates to amplitude*omega
// in closed form; the tabulated form is a plain sampled density.
struct CouplingKernel {
  KernelForm form = KernelForm::Exponential;
  double amplitude = 0.0;
  std::vector<std::pair<double, double>> table;  // (eps, k^2), eps increasing

  static CouplingKernel exponential(double amplitude);
  static CouplingKernel tabulated(std::vector<std::pair<double, double>> rows);
  // rows of "eps k2", '#' comments and blank lines ignored
  static CouplingKernel tabulated_from_text(std::string_view text);
};

struct ContinuumSystem {
  PotentialSpec driver;
  CouplingKernel kernel;
  double attach_point = 0.0;
  GreenConvention convention = GreenConvention::Retarded;
  double numeric_step = 0.01;
};

// Coincident Green's function of the constant channel at height eps, in the
// system's convention; the weight density the kernel multiplies
Complex coincident_family(double eps, EnergyPoint omega,
                          const ContinuumSystem& sys);

Complex kernel_squared(double eps, EnergyPoint omega,
                       const ContinuumSystem& sys);

// V(omega) = integral of k^2(eps) G_eps(a, a; omega) d eps over the channel
// continuum, with the integrable 1/sqrt branch point at eps = omega handled
// by substitution
Complex effective_potential(EnergyPoint omega, const ContinuumSystem& sys);

// Closed form of the exponential-kernel integral: amplitude * omega
Complex analytic_special_value(EnergyPoint omega, double amplitude);

// Upper integration limit that bounds the neglected tail below 1e-19 of the
// exponential kernel scale (the full table span for tabulated kernels)
double continuum_cutoff(const ContinuumSystem& sys, EnergyPoint omega);

// Driver resolvent dressed by one energy-dependent point weight v at the
// attachment position
Complex dressed_point_green(double x, double x0, EnergyPoint omega,
                            const GreenEvaluator& driver, double attach,
                            Complex v);

Complex dressed_continuum_green(double x, double x0, EnergyPoint omega,
                                const ContinuumSystem& sys);

// Midpoint discretization of the continuum into n constant channels on
// [0, eps_max], with strengths sqrt(k^2(eps_j; omega_ref) d eps) all attached
// at the same point
MultiChannelSystem discretize_continuum(const ContinuumSystem& sys,
                                        std::size_t n, double eps_max,
                                        EnergyPoint omega_ref);

}  // namespace crosskit
