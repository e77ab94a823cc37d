#include "crosskit/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "crosskit/errors.hpp"
#include "crosskit/quadrature.hpp"

namespace crosskit {

namespace {

constexpr char kModule[] = "continuum";

const Complex kI{0.0, 1.0};

constexpr double kAbsTol = 1e-10;
constexpr double kRelTol = 1e-8;

double interp_table(const std::vector<std::pair<double, double>>& table,
                    double eps) {
  if (table.empty() || eps < table.front().first || eps > table.back().first)
    return 0.0;
  auto hi = std::lower_bound(
      table.begin(), table.end(), eps,
      [](const std::pair<double, double>& row, double e) {
        return row.first < e;
      });
  if (hi == table.begin()) return hi->second;
  auto lo = hi - 1;
  if (hi == table.end()) return lo->second;
  const double t = (eps - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

void check_exponential_domain(const ContinuumSystem& sys, EnergyPoint omega) {
  if (sys.kernel.form == KernelForm::Exponential && !(omega.re > 0.0))
    throw Error(ErrorKind::NonIntegrable, kModule,
                "exponential kernel tail does not decay for Re(omega) <= 0");
}

}  // namespace

CouplingKernel CouplingKernel::exponential(double amplitude) {
  CouplingKernel k;
  k.form = KernelForm::Exponential;
  k.amplitude = amplitude;
  return k;
}

CouplingKernel CouplingKernel::tabulated(
    std::vector<std::pair<double, double>> rows) {
  if (rows.size() < 2)
    throw Error(ErrorKind::DomainError, kModule,
                "tabulated kernel needs at least 2 rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && !(rows[i].first > rows[i - 1].first))
      throw Error(ErrorKind::DomainError, kModule,
                  "tabulated kernel energies must increase strictly");
    if (!std::isfinite(rows[i].first) || !std::isfinite(rows[i].second) ||
        rows[i].second < 0.0)
      throw Error(ErrorKind::DomainError, kModule,
                  "tabulated kernel densities must be finite and nonnegative");
  }
  CouplingKernel k;
  k.form = KernelForm::Tabulated;
  k.table = std::move(rows);
  return k;
}

CouplingKernel CouplingKernel::tabulated_from_text(std::string_view text) {
  std::vector<std::pair<double, double>> rows;
  std::istringstream stream{std::string(text)};
  std::string line;
  while (std::getline(stream, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double eps, k2;
    if (fields >> eps >> k2) {
      rows.emplace_back(eps, k2);
      continue;
    }
    std::istringstream probe(line);
    std::string token;
    if (probe >> token)
      throw Error(ErrorKind::DomainError, kModule,
                  "malformed kernel table row: " + line);
  }
  return tabulated(std::move(rows));
}

Complex coincident_family(double eps, EnergyPoint omega,
                          const ContinuumSystem& sys) {
  const double mass = sys.driver.mass;
  const Complex gap = Complex(omega) - eps;
  if (sys.convention == GreenConvention::Principal)
    return std::sqrt(mass / (2.0 * gap));
  return mass / (kI * momentum(Complex(omega), eps, mass));
}

Complex kernel_squared(double eps, EnergyPoint omega,
                       const ContinuumSystem& sys) {
  if (sys.kernel.form == KernelForm::Exponential) {
    check_exponential_domain(sys, omega);
    return sys.kernel.amplitude * std::exp(-eps / Complex(omega)) /
           coincident_family(eps, omega, sys);
  }
  return interp_table(sys.kernel.table, eps);
}

double continuum_cutoff(const ContinuumSystem& sys, EnergyPoint omega) {
  if (sys.kernel.form == KernelForm::Tabulated)
    return sys.kernel.table.back().first;
  check_exponential_domain(sys, omega);
  const Complex w{omega};
  // decay constant of |exp(-eps/omega)| along real eps
  const double tau = std::norm(w) / w.real();
  return 45.0 * tau;
}

Complex effective_potential(EnergyPoint omega, const ContinuumSystem& sys) {
  check_exponential_domain(sys, omega);
  if (sys.kernel.form == KernelForm::Exponential &&
      sys.kernel.amplitude == 0.0)
    return Complex(0.0);

  const double lo =
      sys.kernel.form == KernelForm::Tabulated
          ? std::max(0.0, sys.kernel.table.front().first)
          : 0.0;
  const double hi = continuum_cutoff(sys, omega);
  if (!(hi > lo)) return Complex(0.0);

  auto plain = [&](double eps) {
    return kernel_squared(eps, omega, sys) * coincident_family(eps, omega, sys);
  };

  if (omega.im == 0.0 && omega.re > lo && omega.re < hi) {
    // eps = omega -+ u^2 removes the 1/sqrt branch point at threshold
    const double wr = omega.re;
    const Complex below = integrate_gk(
        [&](double u) { return plain(wr - u * u) * 2.0 * u; }, 0.0,
        std::sqrt(wr - lo), kAbsTol, kRelTol);
    const Complex above = integrate_gk(
        [&](double u) { return plain(wr + u * u) * 2.0 * u; }, 0.0,
        std::sqrt(hi - wr), kAbsTol, kRelTol);
    return below + above;
  }

  if (omega.re > lo && omega.re < hi) {
    // split at the closest approach to the branch point for resolution
    return integrate_gk(plain, lo, omega.re, kAbsTol, kRelTol) +
           integrate_gk(plain, omega.re, hi, kAbsTol, kRelTol);
  }
  return integrate_gk(plain, lo, hi, kAbsTol, kRelTol);
}

Complex analytic_special_value(EnergyPoint omega, double amplitude) {
  if (!(omega.re > 0.0))
    throw Error(ErrorKind::NonIntegrable, kModule,
                "closed form needs Re(omega) > 0");
  return amplitude * Complex(omega);
}

Complex dressed_point_green(double x, double x0, EnergyPoint omega,
                            const GreenEvaluator& driver, double attach,
                            Complex v) {
  const Complex gaa = driver(attach, attach, omega);
  const Complex d = 1.0 - v * gaa;
  if (std::abs(d) <= 1e-14)
    throw Error(ErrorKind::PoleError, kModule,
                "omega sits on a pole of the continuum-dressed resolvent");
  return driver(x, x0, omega) +
         v * driver(x, attach, omega) * driver(attach, x0, omega) / d;
}

Complex dressed_continuum_green(double x, double x0, EnergyPoint omega,
                                const ContinuumSystem& sys) {
  const GreenEvaluator driver = GreenEvaluator::for_potential(
      sys.driver, sys.convention, sys.numeric_step);
  return dressed_point_green(x, x0, omega, driver, sys.attach_point,
                             effective_potential(omega, sys));
}

MultiChannelSystem discretize_continuum(const ContinuumSystem& sys,
                                        std::size_t n, double eps_max,
                                        EnergyPoint omega_ref) {
  if (n < 1)
    throw Error(ErrorKind::DomainError, kModule,
                "discretization needs at least one channel");
  if (!(eps_max > 0.0))
    throw Error(ErrorKind::DomainError, kModule,
                "discretization cutoff must be positive");

  const Complex v_ref = effective_potential(omega_ref, sys);
  const double v_scale = std::max(std::abs(v_ref), 1e-12);
  double tail;
  if (sys.kernel.form == KernelForm::Exponential) {
    tail = std::abs(sys.kernel.amplitude * Complex(omega_ref) *
                    std::exp(-eps_max / Complex(omega_ref)));
  } else {
    const double span = sys.kernel.table.back().first;
    tail = eps_max >= span
               ? 0.0
               : std::abs(integrate_gk(
                     [&](double eps) {
                       return kernel_squared(eps, omega_ref, sys) *
                              coincident_family(eps, omega_ref, sys);
                     },
                     eps_max, span, kAbsTol, kRelTol));
  }
  if (tail > 1e-6 * v_scale)
    throw Error(ErrorKind::TailTooHeavy, kModule,
                "kernel weight beyond the cutoff exceeds 1e-6 of the "
                "effective potential");

  MultiChannelSystem out;
  out.driver = sys.driver;
  out.convention = sys.convention;
  out.numeric_step = sys.numeric_step;
  const double de = eps_max / static_cast<double>(n);
  out.channels.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double eps = (static_cast<double>(j) + 0.5) * de;
    ChannelSpec ch;
    ch.potential = PotentialSpec::constant(eps, sys.driver.mass);
    ch.strength = std::sqrt(kernel_squared(eps, omega_ref, sys) * de);
    ch.point = sys.attach_point;
    out.channels.push_back(std::move(ch));
  }
  return out;
}

}  // namespace crosskit
