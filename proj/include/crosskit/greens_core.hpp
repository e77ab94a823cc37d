#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "crosskit/types.hpp"

namespace crosskit {

// Channel momentum k = sqrt(2m(omega - v0)) on the branch Im k >= 0 (decaying
// closed channels, outgoing open channels).
Complex momentum(Complex omega, double v0, double mass);

// Analytic continuation of the retarded momentum through the real axis: below
// threshold (Re(omega - v0) < 0) the lower half plane lies on the second
// sheet, so the principal root flips sign there. Used by pole searches.
Complex momentum_continued(Complex omega, double v0, double mass);

// Bare Green's functions G0(x, x0; omega) of (omega - H) G = delta(x - x0),
// H = -(1/(2m)) d2/dx2 + V(x).
Complex green_constant(double x, double x0, EnergyPoint omega,
                       const PotentialSpec& pot, GreenConvention conv);
Complex green_linear(double x, double x0, EnergyPoint omega,
                     const PotentialSpec& pot);
Complex green_numeric(double x, double x0, EnergyPoint omega,
                      const PotentialSpec& pot, double step);

struct EigenPair {
  double energy;
  Complex phi_x;   // eigenfunction at the first argument
  Complex phi_x0;  // eigenfunction at the second argument
};

// Spectral resolution sum_n phi_n(x) phi_n*(x0) / (omega - E_n) over the
// supplied pairs, truncated once trailing contributions drop below 1e-10 of
// the accumulated sum.
Complex green_spectral(const std::vector<EigenPair>& pairs, EnergyPoint omega);

enum class GreenMethod {
  ClosedFormConstant,
  AiryLinear,
  NumericWronskian,
  SpectralSum,
};

// Immutable, thread-safe evaluator dispatching on the potential kind. Copies
// share the per-frequency Numerov cache, so repeated evaluations at one omega
// propagate the grid once.
class GreenEvaluator {
 public:
  static GreenEvaluator constant(PotentialSpec pot,
                                 GreenConvention conv = GreenConvention::Retarded);
  static GreenEvaluator linear(PotentialSpec pot);
  static GreenEvaluator numeric(PotentialSpec pot, double step);
  // dispatch on pot.kind; step only matters for Sampled potentials
  static GreenEvaluator for_potential(PotentialSpec pot, GreenConvention conv,
                                      double step = 0.01);

  Complex operator()(double x, double x0, EnergyPoint omega) const;

  GreenMethod method() const { return method_; }
  const PotentialSpec& potential() const { return pot_; }
  GreenConvention convention() const { return conv_; }

 private:
  struct NumericCache;

  GreenEvaluator(PotentialSpec pot, GreenConvention conv, GreenMethod method,
                 double step);

  PotentialSpec pot_;
  GreenConvention conv_ = GreenConvention::Retarded;
  GreenMethod method_ = GreenMethod::ClosedFormConstant;
  double step_ = 0.01;
  std::shared_ptr<NumericCache> cache_;
};

// Two-sided Numerov propagation of one frequency on a sampled potential;
// exposed for reuse by the evaluator cache.
struct NumerovSolution {
  double a = 0.0;            // left edge
  double h = 0.0;            // grid step
  std::vector<Complex> f;    // 2m(V - omega) on the grid
  std::vector<Complex> uL;   // decaying/outgoing toward -inf
  std::vector<Complex> uR;   // decaying/outgoing toward +inf
  std::vector<Complex> dL;   // du/dx on the grid
  std::vector<Complex> dR;
  Complex wronskian{};
  double mass = 1.0;

  Complex eval_green(double x, double x0) const;
};

NumerovSolution numerov_propagate(const PotentialSpec& pot, Complex omega,
                                  double step);

}  // namespace crosskit
