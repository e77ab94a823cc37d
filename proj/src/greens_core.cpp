#include "crosskit/greens_core.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "crosskit/airy.hpp"
#include "crosskit/errors.hpp"
#include "crosskit/util.hpp"

namespace crosskit {

namespace {

constexpr char kModule[] = "greens_core";

const Complex kI{0.0, 1.0};

// Ai(z exp(2i pi/3)) is the solution of u'' = z u that is outgoing toward
// z -> -inf; its Wronskian {it, Ai} is -exp(-i pi/6) / (2 pi).
const Complex kRotPlus = std::polar(1.0, 2.0 * M_PI / 3.0);

void require_kind(const PotentialSpec& pot, PotentialKind kind,
                  const char* what) {
  if (pot.kind != kind)
    throw Error(ErrorKind::InvalidPotential, kModule, what);
}

}  // namespace

Complex momentum(Complex omega, double v0, double mass) {
  return std::sqrt(2.0 * mass * (omega - v0));
}

Complex momentum_continued(Complex omega, double v0, double mass) {
  Complex k = momentum(omega, v0, mass);
  if (omega.imag() < 0.0 && omega.real() - v0 < 0.0) k = -k;
  return k;
}

Complex green_constant(double x, double x0, EnergyPoint omega,
                       const PotentialSpec& pot, GreenConvention conv) {
  require_kind(pot, PotentialKind::Constant,
               "green_constant needs a constant potential");
  const Complex w = omega;
  if (omega.im == 0.0 && omega.re == pot.v0)
    throw Error(ErrorKind::BranchPointError, kModule,
                "energy sits exactly on the channel threshold");
  const Complex k = momentum_continued(w, pot.v0, pot.mass);
  const Complex phase = std::exp(kI * k * std::abs(x - x0));
  if (conv == GreenConvention::Principal) {
    Complex q = pot.mass / (2.0 * (w - pot.v0));
    // complex division can land a real-axis quotient on the lower edge of
    // the cut (-0.0 imaginary part); the principal branch lives on the upper
    if (q.imag() == 0.0) q.imag(0.0);
    return std::sqrt(q) * phase;
  }
  return pot.mass / (kI * k) * phase;
}

Complex green_linear(double x, double x0, EnergyPoint omega,
                     const PotentialSpec& pot) {
  require_kind(pot, PotentialKind::Linear,
               "green_linear needs a linear potential");
  if (pot.slope == 0.0)
    throw Error(ErrorKind::DegenerateSlope, kModule,
                "linear potential with zero slope; use the constant form");
  double s = pot.slope;
  double xl = std::min(x, x0);
  double xr = std::max(x, x0);
  if (s < 0.0) {
    // mirror x -> -x maps slope -s onto s and swaps the ordering
    s = -s;
    const double t = xl;
    xl = -xr;
    xr = -t;
  }
  const double mass = pot.mass;
  const double alpha = std::cbrt(2.0 * mass * s);
  const Complex xt = (Complex(omega) - pot.v0) / s;

  const airy::ScaledAiryValue up =
      airy::airy_ai_scaled(alpha * (xr - xt));
  const airy::ScaledAiryValue um =
      airy::airy_ai_scaled(alpha * (xl - xt) * kRotPlus);
  // G = 2m u_-(x<) u_+(x>) / W with W = -alpha e^{-i pi/6} / (2 pi) in x
  const Complex prefactor =
      -4.0 * M_PI * mass * std::polar(1.0, M_PI / 6.0) / alpha;
  return prefactor * um.ai_m * up.ai_m * std::exp(-(um.zeta + up.zeta));
}

namespace {

// ratio u(x + h)/u(x) of the boundary solution of the locally linearized
// potential, assembled from scaled Airy values so large zeta never overflows
Complex airy_start_ratio(Complex xi0, Complex xi1, bool rotate) {
  airy::ScaledAiryValue a0, a1;
  if (rotate) {
    a0 = airy::airy_ai_scaled(xi0 * kRotPlus);
    a1 = airy::airy_ai_scaled(xi1 * kRotPlus);
  } else {
    a0 = airy::airy_ai_scaled(xi0);
    a1 = airy::airy_ai_scaled(xi1);
  }
  return a1.ai_m / a0.ai_m * std::exp(a0.zeta - a1.zeta);
}

// Seed pair {u(xb), u(xb + h into the domain)} for the solution decaying or
// outgoing away from the domain, from the potential linearized at the
// boundary. dir = -1 seeds the left edge (away = -inf), dir = +1 the right.
std::pair<Complex, Complex> boundary_seed(Complex omega, double vb, double sb,
                                          double xb, double h, int dir,
                                          double mass) {
  const double h_in = -dir * h;
  if (sb != 0.0) {
    const double alpha = std::cbrt(2.0 * mass * std::abs(sb));
    const Complex xt = xb + (omega - vb) / sb;
    // away-side behavior decides the branch: potential rising toward away
    // means a recessive Ai, falling means the outgoing rotated combination;
    // negative slopes evaluate on the mirrored coordinate
    const bool rising_away = (dir < 0) ? (sb < 0.0) : (sb > 0.0);
    Complex xi0, xi1;
    if (sb > 0.0) {
      xi0 = alpha * (xb - xt);
      xi1 = alpha * (xb + h_in - xt);
    } else {
      xi0 = alpha * (xt - xb);
      xi1 = alpha * (xt - xb - h_in);
    }
    if (std::abs(xi0) <= 2500.0) {
      const Complex ratio = airy_start_ratio(xi0, xi1, !rising_away);
      return {Complex(1.0), ratio};
    }
  }
  // slope negligible (or turning point so remote the plane wave is exact to
  // working precision): the wave outgoing/decaying toward away shifts by
  // exp(-i k h) when stepped one h into the domain, on either edge
  const Complex k = momentum_continued(omega, vb, mass);
  return {Complex(1.0), std::exp(-kI * k * h)};
}

Complex hermite5(Complex u0, Complex d0, Complex k0, Complex u1, Complex d1,
                 Complex k1, double h, double t) {
  const Complex b = d0 * h;
  const Complex c = k0 * (h * h);
  const Complex r1 = u1 - u0 - b - 0.5 * c;
  const Complex r2 = d1 * h - b - c;
  const Complex r3 = k1 * (h * h) - c;
  const Complex a3 = 10.0 * r1 - 4.0 * r2 + 0.5 * r3;
  const Complex a4 = -15.0 * r1 + 7.0 * r2 - r3;
  const Complex a5 = 6.0 * r1 - 3.0 * r2 + 0.5 * r3;
  return u0 + t * (b + t * (0.5 * c + t * (a3 + t * (a4 + t * a5))));
}

// Numerov-consistent du/dx, O(h^4) in the interior, O(h^3) one-sided at ends
std::vector<Complex> grid_derivative(const std::vector<Complex>& u,
                                     const std::vector<Complex>& f, double h) {
  const std::size_t n = u.size();
  std::vector<Complex> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i)
    d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h) -
           (h / 12.0) * (f[i + 1] * u[i + 1] - f[i - 1] * u[i - 1]);
  d[0] = (u[1] - u[0]) / h - h * (2.0 * f[0] * u[0] + f[1] * u[1]) / 6.0;
  d[n - 1] = (u[n - 1] - u[n - 2]) / h +
             h * (2.0 * f[n - 1] * u[n - 1] + f[n - 2] * u[n - 2]) / 6.0;
  return d;
}

}  // namespace

NumerovSolution numerov_propagate(const PotentialSpec& pot, Complex omega,
                                  double step) {
  require_kind(pot, PotentialKind::Sampled,
               "numerov_propagate needs a sampled potential");
  if (!(step > 0.0))
    throw Error(ErrorKind::DomainError, kModule, "step must be positive");

  std::vector<double> xs(pot.samples.size()), vs(pot.samples.size());
  for (std::size_t i = 0; i < pot.samples.size(); ++i) {
    xs[i] = pot.samples[i].first;
    vs[i] = pot.samples[i].second;
  }
  const CubicSpline spline(xs, vs);

  NumerovSolution sol;
  sol.mass = pot.mass;
  sol.a = xs.front();
  const double b = xs.back();
  const std::size_t n =
      std::max<std::size_t>(9, static_cast<std::size_t>(
                                   std::lround((b - sol.a) / step)) + 1);
  sol.h = (b - sol.a) / static_cast<double>(n - 1);
  const double h = sol.h;

  sol.f.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sol.a + static_cast<double>(i) * h;
    sol.f[i] = 2.0 * pot.mass * (spline(std::min(x, b)) - omega);
  }

  sol.uL.resize(n);
  sol.uR.resize(n);
  auto [l0, l1] = boundary_seed(omega, vs.front(), spline.derivative(sol.a),
                                sol.a, h, -1, pot.mass);
  sol.uL[0] = l0;
  sol.uL[1] = l1;
  auto [r0, r1] =
      boundary_seed(omega, vs.back(), spline.derivative(b), b, h, +1, pot.mass);
  sol.uR[n - 1] = r0;
  sol.uR[n - 2] = r1;

  const double h2 = h * h;
  auto weight = [&](std::size_t i) { return 1.0 - h2 / 12.0 * sol.f[i]; };
  for (std::size_t i = 1; i + 1 < n; ++i)
    sol.uL[i + 1] = (2.0 * sol.uL[i] * (1.0 + 5.0 * h2 / 12.0 * sol.f[i]) -
                     sol.uL[i - 1] * weight(i - 1)) /
                    weight(i + 1);
  for (std::size_t i = n - 2; i > 0; --i)
    sol.uR[i - 1] = (2.0 * sol.uR[i] * (1.0 + 5.0 * h2 / 12.0 * sol.f[i]) -
                     sol.uR[i + 1] * weight(i + 1)) /
                    weight(i - 1);

  sol.dL = grid_derivative(sol.uL, sol.f, h);
  sol.dR = grid_derivative(sol.uR, sol.f, h);

  // the Wronskian is constant in exact arithmetic; read it where the two
  // solutions are best balanced and treat drift elsewhere as an accuracy gate
  std::size_t ref = n / 2;
  double best = -1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double m = std::abs(sol.uL[i]) * std::abs(sol.uR[i]);
    if (m > best) {
      best = m;
      ref = i;
    }
  }
  auto wr = [&](std::size_t i) {
    return sol.uL[i] * sol.dR[i] - sol.dL[i] * sol.uR[i];
  };
  sol.wronskian = wr(ref);
  const double scale = std::abs(sol.uL[ref]) * std::abs(sol.dR[ref]) +
                       std::abs(sol.dL[ref]) * std::abs(sol.uR[ref]);
  if (std::abs(sol.wronskian) < 1e-10 * scale)
    throw Error(ErrorKind::WronskianDegenerate, kModule,
                "boundary solutions are linearly dependent; omega sits on an "
                "eigenvalue of the sampled potential");
  // drift is judged against the local product size: in tunneling regions the
  // two cross terms are exponentially larger than the Wronskian itself, so a
  // fixed fraction of |W| would flag pure roundoff
  double drift = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double local = std::abs(sol.uL[i]) * std::abs(sol.dR[i]) +
                         std::abs(sol.dL[i]) * std::abs(sol.uR[i]);
    drift = std::max(drift, std::abs(wr(i) - sol.wronskian) /
                                std::max(local, std::abs(sol.wronskian)));
  }
  if (drift > 1e-6)
    throw Error(ErrorKind::WronskianDegenerate, kModule,
                "Wronskian drifts beyond 1e-6 of its local scale; refine the "
                "propagation step");
  return sol;
}

Complex NumerovSolution::eval_green(double x, double x0) const {
  const std::size_t n = uL.size();
  const double b = a + static_cast<double>(n - 1) * h;
  const double tol = 1e-9 * (b - a);
  auto inside = [&](double p) { return p >= a - tol && p <= b + tol; };
  if (!inside(x) || !inside(x0))
    throw Error(ErrorKind::DomainError, kModule,
                "evaluation point outside the sampled range");
  const double xl = std::clamp(std::min(x, x0), a, b);
  const double xr = std::clamp(std::max(x, x0), a, b);

  auto interp = [&](const std::vector<Complex>& u, const std::vector<Complex>& d,
                    double p) {
    std::size_t j = static_cast<std::size_t>(
        std::clamp(std::floor((p - a) / h), 0.0, static_cast<double>(n - 2)));
    const double t = (p - (a + static_cast<double>(j) * h)) / h;
    return hermite5(u[j], d[j], f[j] * u[j], u[j + 1], d[j + 1],
                    f[j + 1] * u[j + 1], h, t);
  };
  return 2.0 * mass * interp(uL, dL, xl) * interp(uR, dR, xr) / wronskian;
}

Complex green_numeric(double x, double x0, EnergyPoint omega,
                      const PotentialSpec& pot, double step) {
  return numerov_propagate(pot, Complex(omega), step).eval_green(x, x0);
}

Complex green_spectral(const std::vector<EigenPair>& pairs,
                       EnergyPoint omega) {
  if (pairs.empty())
    throw Error(ErrorKind::DomainError, kModule,
                "spectral sum needs at least one eigenpair");
  CompensatedComplexSum sum;
  int quiet = 0;
  for (const EigenPair& p : pairs) {
    const Complex gap = Complex(omega) - p.energy;
    if (omega.im == 0.0 &&
        std::abs(gap.real()) <= 1e-14 * std::max(1.0, std::abs(p.energy)))
      throw Error(ErrorKind::PoleError, kModule,
                  "energy coincides with a discrete eigenvalue");
    const Complex term = p.phi_x * std::conj(p.phi_x0) / gap;
    sum.add(term);
    if (std::abs(term) < 1.25e-11 * std::abs(sum.value()))
      ++quiet;
    else
      quiet = 0;
    if (quiet >= 8) break;
  }
  return sum.value();
}

struct GreenEvaluator::NumericCache {
  std::mutex lock;
  std::map<std::pair<double, double>, std::shared_ptr<const NumerovSolution>>
      entries;
};

GreenEvaluator::GreenEvaluator(PotentialSpec pot, GreenConvention conv,
                               GreenMethod method, double step)
    : pot_(std::move(pot)), conv_(conv), method_(method), step_(step) {
  if (method_ == GreenMethod::NumericWronskian)
    cache_ = std::make_shared<NumericCache>();
}

GreenEvaluator GreenEvaluator::constant(PotentialSpec pot,
                                        GreenConvention conv) {
  require_kind(pot, PotentialKind::Constant, "constant evaluator");
  return GreenEvaluator(std::move(pot), conv, GreenMethod::ClosedFormConstant,
                        0.0);
}

GreenEvaluator GreenEvaluator::linear(PotentialSpec pot) {
  require_kind(pot, PotentialKind::Linear, "linear evaluator");
  if (pot.slope == 0.0)
    throw Error(ErrorKind::DegenerateSlope, kModule,
                "linear potential with zero slope; use the constant form");
  return GreenEvaluator(std::move(pot), GreenConvention::Retarded,
                        GreenMethod::AiryLinear, 0.0);
}

GreenEvaluator GreenEvaluator::numeric(PotentialSpec pot, double step) {
  require_kind(pot, PotentialKind::Sampled, "numeric evaluator");
  if (!(step > 0.0))
    throw Error(ErrorKind::DomainError, kModule, "step must be positive");
  return GreenEvaluator(std::move(pot), GreenConvention::Retarded,
                        GreenMethod::NumericWronskian, step);
}

GreenEvaluator GreenEvaluator::for_potential(PotentialSpec pot,
                                             GreenConvention conv,
                                             double step) {
  if (conv == GreenConvention::Principal &&
      pot.kind != PotentialKind::Constant)
    throw Error(ErrorKind::InvalidPotential, kModule,
                "the principal convention is defined for constant potentials "
                "only");
  switch (pot.kind) {
    case PotentialKind::Constant:
      return constant(std::move(pot), conv);
    case PotentialKind::Linear:
      return linear(std::move(pot));
    case PotentialKind::Sampled:
      return numeric(std::move(pot), step);
  }
  throw Error(ErrorKind::InvalidPotential, kModule, "unknown potential kind");
}

Complex GreenEvaluator::operator()(double x, double x0,
                                   EnergyPoint omega) const {
  switch (method_) {
    case GreenMethod::ClosedFormConstant:
      return green_constant(x, x0, omega, pot_, conv_);
    case GreenMethod::AiryLinear:
      return green_linear(x, x0, omega, pot_);
    case GreenMethod::NumericWronskian: {
      const std::pair<double, double> key{omega.re, omega.im};
      std::shared_ptr<const NumerovSolution> sol;
      {
        std::lock_guard<std::mutex> guard(cache_->lock);
        auto it = cache_->entries.find(key);
        if (it != cache_->entries.end()) sol = it->second;
      }
      if (!sol) {
        sol = std::make_shared<const NumerovSolution>(
            numerov_propagate(pot_, Complex(omega), step_));
        std::lock_guard<std::mutex> guard(cache_->lock);
        cache_->entries.emplace(key, sol);
      }
      return sol->eval_green(x, x0);
    }
    case GreenMethod::SpectralSum:
      break;
  }
  throw Error(ErrorKind::DomainError, kModule,
              "evaluator has no potential-backed method");
}

}  // namespace crosskit
