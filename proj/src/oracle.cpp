#include "crosskit/oracle.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>

#include "crosskit/errors.hpp"
#include "crosskit/util.hpp"

namespace crosskit {

namespace {

constexpr char kModule[] = "oracle";

const Complex kI{0.0, 1.0};

void check_constant_real(const MultiChannelSystem& sys) {
  if (sys.driver.kind != PotentialKind::Constant)
    throw Error(ErrorKind::NonConstantAsymptotics, kModule,
                "matching needs a constant driver potential");
  for (const ChannelSpec& ch : sys.channels) {
    if (ch.potential.kind != PotentialKind::Constant)
      throw Error(ErrorKind::NonConstantAsymptotics, kModule,
                  "matching needs constant channel potentials");
    if (ch.strength.imag() != 0.0)
      throw Error(ErrorKind::DomainError, kModule,
                  "matching needs real coupling strengths");
    if (ch.potential.mass != sys.driver.mass)
      throw Error(ErrorKind::InvalidPotential, kModule,
                  "all channels must share the driver mass");
  }
}

}  // namespace

ScatterResult matching_solve(const MultiChannelSystem& sys, double E) {
  check_constant_real(sys);
  const double mass = sys.driver.mass;
  if (!(E > sys.driver.v0))
    throw Error(ErrorKind::ClosedEntranceChannel, kModule,
                "driver channel is closed at this energy");
  const double k1 = std::sqrt(2.0 * mass * (E - sys.driver.v0));

  const std::size_t nch = sys.channels.size();
  std::vector<double> pts;
  for (const ChannelSpec& ch : sys.channels) pts.push_back(ch.point);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t np = pts.size();

  std::vector<Complex> kch(nch);
  for (std::size_t e = 0; e < nch; ++e)
    kch[e] = momentum(Complex(E, 0.0), sys.channels[e].potential.v0, mass);

  // driver wave per segment s in [0, np]: a_s exp(i k1 x) + b_s exp(-i k1 x)
  // with a_0 = 1 (incident) and b_np = 0; channel eps carries one outgoing
  // amplitude g_eps referenced to its own point
  //   unknowns: [b_0, a_1, b_1, ..., a_{np-1}, b_{np-1}, a_np, g_0, ...]
  const std::size_t dim = 2 * np + nch;
  Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim));
  Eigen::VectorXcd rhs =
      Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));

  // column of a_s/b_s in the unknown vector, or -1 when the value is fixed
  auto col_a = [&](std::size_t s) -> int {
    return s == 0 ? -1 : static_cast<int>(2 * s - 1);
  };
  auto col_b = [&](std::size_t s) -> int {
    if (s == np) return -1;
    return s == 0 ? 0 : static_cast<int>(2 * s);
  };

  std::size_t row = 0;
  for (std::size_t p = 0; p < np; ++p) {
    const double x = pts[p];
    const Complex ep = std::exp(kI * k1 * x);
    const Complex em = std::exp(-kI * k1 * x);

    // continuity of the driver wave across the breakpoint
    auto put = [&](std::size_t r, std::size_t seg, bool is_a, Complex coeff) {
      const int col = is_a ? col_a(seg) : col_b(seg);
      if (col >= 0) {
        mat(static_cast<Eigen::Index>(r), col) += coeff;
      } else if (is_a && seg == 0) {
        rhs(static_cast<Eigen::Index>(r)) -= coeff;  // a_0 = 1
      }
      // b_np = 0 contributes nothing
    };

    put(row, p + 1, true, ep);
    put(row, p + 1, false, em);
    put(row, p, true, -ep);
    put(row, p, false, -em);
    ++row;

    // derivative jump equals the summed channel pull at this point
    put(row, p + 1, true, kI * k1 * ep);
    put(row, p + 1, false, -kI * k1 * em);
    put(row, p, true, -kI * k1 * ep);
    put(row, p, false, kI * k1 * em);
    for (std::size_t e = 0; e < nch; ++e)
      if (sys.channels[e].point == x)
        mat(static_cast<Eigen::Index>(row),
            static_cast<Eigen::Index>(2 * np + e)) =
            -2.0 * mass * sys.channels[e].strength.real();
    ++row;
  }

  for (std::size_t e = 0; e < nch; ++e) {
    const double x = sys.channels[e].point;
    const std::size_t seg = static_cast<std::size_t>(
        std::lower_bound(pts.begin(), pts.end(), x) - pts.begin());
    const Complex ep = std::exp(kI * k1 * x);
    const Complex em = std::exp(-kI * k1 * x);
    const double ke0 = sys.channels[e].strength.real();
    const std::size_t r = row + e;
    mat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(2 * np + e)) =
        2.0 * kI * kch[e];
    auto put = [&](std::size_t segment, bool is_a, Complex coeff) {
      const int col = is_a ? col_a(segment) : col_b(segment);
      if (col >= 0)
        mat(static_cast<Eigen::Index>(r), col) += coeff;
      else if (is_a && segment == 0)
        rhs(static_cast<Eigen::Index>(r)) -= coeff;
    };
    put(seg, true, -2.0 * mass * ke0 * ep);
    put(seg, false, -2.0 * mass * ke0 * em);
  }

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(mat);
  if (!(lu.rcond() > 1e-15))
    throw Error(ErrorKind::SingularSystem, kModule,
                "matching system is singular at this energy");
  Eigen::VectorXcd sol = lu.solve(rhs);

  ScatterResult res;
  res.r = sol(0);
  res.t = np == 0 ? Complex(1.0) : sol(static_cast<Eigen::Index>(2 * np - 1));
  if (np == 0) res.r = 0.0;
  res.R = std::norm(res.r);
  res.T = std::norm(res.t);
  res.flux_sum = res.R + res.T;
  for (std::size_t e = 0; e < nch; ++e) {
    const Complex g = sol(static_cast<Eigen::Index>(2 * np + e));
    const double x = sys.channels[e].point;
    res.channel_amplitudes.push_back(
        {g * std::exp(kI * kch[e] * x), g * std::exp(-kI * kch[e] * x)});
    const bool open = E > sys.channels[e].potential.v0;
    const double tr = open ? kch[e].real() / k1 * 2.0 * std::norm(g) : 0.0;
    res.transfer.push_back(tr);
    res.flux_sum += tr;
  }
  return res;
}

namespace {

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

struct FftPlans {
  fftw_complex* scratch = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::size_t n = 0;

  explicit FftPlans(std::size_t size) : n(size) {
    std::lock_guard<std::mutex> guard(fftw_plan_mutex());
    scratch = fftw_alloc_complex(n);
    forward = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch,
                               FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch,
                                FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftPlans() {
    std::lock_guard<std::mutex> guard(fftw_plan_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(scratch);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  void run(fftw_plan plan, std::vector<Complex>& data) {
    std::copy(data.begin(), data.end(),
              reinterpret_cast<Complex*>(scratch));
    fftw_execute(plan);
    std::copy(reinterpret_cast<Complex*>(scratch),
              reinterpret_cast<Complex*>(scratch) + n, data.begin());
  }
};

double potential_on_grid(const PotentialSpec& pot, double x,
                         const CubicSpline* spline) {
  switch (pot.kind) {
    case PotentialKind::Constant:
      return pot.v0;
    case PotentialKind::Linear:
      return pot.v0 + pot.slope * x;
    case PotentialKind::Sampled:
      if (x < spline->x_min() - 1e-12 || x > spline->x_max() + 1e-12)
        throw Error(ErrorKind::DomainError, kModule,
                    "propagation box leaves the sampled potential range");
      return (*spline)(std::clamp(x, spline->x_min(), spline->x_max()));
  }
  throw Error(ErrorKind::InvalidPotential, kModule, "unknown potential kind");
}

}  // namespace

PropagationResult split_operator_propagate(
    const MultiChannelSystem& sys,
    const std::vector<RegularizedCoupling>& couplings, const WaveField& psi0,
    const PropagationConfig& cfg) {
  const std::size_t nch = sys.channels.size() + 1;
  if (couplings.size() != sys.channels.size())
    throw Error(ErrorKind::DomainError, kModule,
                "one regularized coupling per channel required");
  if (cfg.points < 16 || !(cfg.x_max > cfg.x_min) || !(cfg.dt > 0.0) ||
      cfg.sample_stride < 1)
    throw Error(ErrorKind::DomainError, kModule,
                "propagation config needs a box, points >= 16, dt > 0");
  const std::size_t m = cfg.points;
  const double h = (cfg.x_max - cfg.x_min) / static_cast<double>(m);
  const double mass = sys.driver.mass;

  if (psi0.grid.size() != m)
    throw Error(ErrorKind::DomainError, kModule,
                "initial wave must live on the propagation grid");
  for (std::size_t j = 0; j < m; ++j)
    if (std::abs(psi0.grid[j] - (cfg.x_min + static_cast<double>(j) * h)) >
        1e-9 * h)
      throw Error(ErrorKind::DomainError, kModule,
                  "initial wave must live on the propagation grid");

  // per-point half-step coupling propagator exp(-i Q dt / 2)
  std::vector<std::unique_ptr<CubicSpline>> splines(nch);
  auto spec_of = [&](std::size_t c) -> const PotentialSpec& {
    return c == 0 ? sys.driver : sys.channels[c - 1].potential;
  };
  for (std::size_t c = 0; c < nch; ++c) {
    const PotentialSpec& pot = spec_of(c);
    if (pot.kind == PotentialKind::Sampled) {
      std::vector<double> xs(pot.samples.size()), vs(pot.samples.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = pot.samples[i].first;
        vs[i] = pot.samples[i].second;
      }
      splines[c] = std::make_unique<CubicSpline>(xs, vs);
    }
    if (pot.mass != mass)
      throw Error(ErrorKind::InvalidPotential, kModule,
                  "all channels must share the driver mass");
  }

  // grid-normalized Gaussian couplings: h * sum = strength exactly
  std::vector<std::vector<double>> gauss(couplings.size(),
                                         std::vector<double>(m));
  for (std::size_t e = 0; e < couplings.size(); ++e) {
    const RegularizedCoupling& rc = couplings[e];
    if (!(rc.width > 0.0))
      throw Error(ErrorKind::DomainError, kModule,
                  "regularized coupling width must be positive");
    CompensatedSum norm;
    for (std::size_t j = 0; j < m; ++j) {
      const double dx = cfg.x_min + static_cast<double>(j) * h - rc.location;
      gauss[e][j] = std::exp(-dx * dx / (2.0 * rc.width * rc.width));
      norm.add(gauss[e][j]);
    }
    const double scale = rc.strength / (h * norm.value());
    for (double& v : gauss[e]) v *= scale;
  }

  std::vector<Eigen::MatrixXcd> half(m);
  {
    Eigen::MatrixXd q(static_cast<Eigen::Index>(nch),
                      static_cast<Eigen::Index>(nch));
    for (std::size_t j = 0; j < m; ++j) {
      const double x = cfg.x_min + static_cast<double>(j) * h;
      q.setZero();
      for (std::size_t c = 0; c < nch; ++c)
        q(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) =
            potential_on_grid(spec_of(c), x, splines[c].get());
      for (std::size_t e = 0; e < couplings.size(); ++e) {
        q(0, static_cast<Eigen::Index>(e + 1)) = gauss[e][j];
        q(static_cast<Eigen::Index>(e + 1), 0) = gauss[e][j];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
      Eigen::VectorXcd phases(static_cast<Eigen::Index>(nch));
      for (std::size_t c = 0; c < nch; ++c)
        phases(static_cast<Eigen::Index>(c)) = std::exp(
            -kI * es.eigenvalues()(static_cast<Eigen::Index>(c)) * cfg.dt / 2.0);
      half[j] = es.eigenvectors() * phases.asDiagonal() *
                es.eigenvectors().transpose();
    }
  }

  std::vector<Complex> kinetic(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double q = (j <= m / 2) ? static_cast<double>(j)
                                  : static_cast<double>(j) - static_cast<double>(m);
    const double k = 2.0 * M_PI * q / (cfg.x_max - cfg.x_min);
    kinetic[j] = std::exp(-kI * (k * k / (2.0 * mass)) * cfg.dt);
  }

  std::vector<double> mask;
  if (cfg.absorber_width > 0.0) {
    mask.assign(m, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double x = cfg.x_min + static_cast<double>(j) * h;
      const double edge = std::min(x - cfg.x_min, cfg.x_max - x);
      if (edge < cfg.absorber_width) {
        const double s = 1.0 - edge / cfg.absorber_width;  // 0 -> 1 at edge
        const double ramp = std::sin(0.5 * M_PI * s);
        mask[j] = std::exp(-cfg.absorber_strength * cfg.dt * ramp * ramp);
      }
    }
  }

  std::vector<std::vector<Complex>> psi(nch, std::vector<Complex>(m, 0.0));
  psi[0] = psi0.values;
  FftPlans plans(m);

  auto total_norm = [&]() {
    CompensatedSum acc;
    for (const auto& channel : psi)
      for (const Complex& v : channel) acc.add(std::norm(v));
    return h * acc.value();
  };
  auto overlap = [&]() {
    CompensatedComplexSum acc;
    for (std::size_t j = 0; j < m; ++j)
      acc.add(std::conj(psi0.values[j]) * psi[0][j]);
    return h * acc.value();
  };
  auto populations = [&](PropagationResult& out) {
    for (std::size_t c = 0; c < nch; ++c) {
      CompensatedSum acc;
      for (const Complex& v : psi[c]) acc.add(std::norm(v));
      out.populations[c].push_back(h * acc.value());
    }
  };

  const std::size_t steps =
      static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));
  const double norm0 = total_norm();

  PropagationResult out;
  out.populations.resize(nch);
  out.times.push_back(0.0);
  populations(out);
  out.survival.push_back(std::norm(overlap()));

  Eigen::VectorXcd column(static_cast<Eigen::Index>(nch));
  for (std::size_t step = 1; step <= steps; ++step) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < nch; ++c)
        column(static_cast<Eigen::Index>(c)) = psi[c][j];
      column = half[j] * column;
      for (std::size_t c = 0; c < nch; ++c)
        psi[c][j] = column(static_cast<Eigen::Index>(c));
    }
    for (std::size_t c = 0; c < nch; ++c) {
      plans.run(plans.forward, psi[c]);
      for (std::size_t j = 0; j < m; ++j)
        psi[c][j] *= kinetic[j] / static_cast<double>(m);
      plans.run(plans.backward, psi[c]);
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < nch; ++c)
        column(static_cast<Eigen::Index>(c)) = psi[c][j];
      column = half[j] * column;
      for (std::size_t c = 0; c < nch; ++c)
        psi[c][j] = column(static_cast<Eigen::Index>(c));
    }
    if (!mask.empty())
      for (std::size_t c = 0; c < nch; ++c)
        for (std::size_t j = 0; j < m; ++j) psi[c][j] *= mask[j];

    if (step % cfg.sample_stride == 0 || step == steps) {
      out.times.push_back(static_cast<double>(step) * cfg.dt);
      populations(out);
      out.survival.push_back(std::norm(overlap()));
      if (mask.empty()) {
        const double drift = std::abs(total_norm() - norm0);
        out.norm_drift = std::max(out.norm_drift, drift);
        const double budget =
            1e-10 * norm0 * (1.0 + static_cast<double>(step) / 1e4);
        if (drift > budget)
          throw Error(ErrorKind::StabilityViolation, kModule,
                      "norm drifted beyond 1e-10 per 1e4 steps");
      }
    }
  }
  return out;
}

Extrapolated delta_width_extrapolate(const std::array<WidthPoint, 3>& pts) {
  std::array<WidthPoint, 3> p = pts;
  std::sort(p.begin(), p.end(),
            [](const WidthPoint& a, const WidthPoint& b) {
              return a.sigma > b.sigma;
            });
  if (!(p[2].sigma > 0.0) || p[0].sigma == p[1].sigma ||
      p[1].sigma == p[2].sigma)
    throw Error(ErrorKind::DomainError, kModule,
                "extrapolation needs three distinct positive widths");
  const double s1 = p[0].sigma * p[0].sigma;
  const double s2 = p[1].sigma * p[1].sigma;
  const double s3 = p[2].sigma * p[2].sigma;
  const double quad =
      p[0].value * s2 * s3 / ((s2 - s1) * (s3 - s1)) +
      p[1].value * s1 * s3 / ((s1 - s2) * (s3 - s2)) +
      p[2].value * s1 * s2 / ((s1 - s3) * (s2 - s3));
  const double lin = (p[1].value * s3 - p[2].value * s2) / (s3 - s2);

  Extrapolated out;
  out.value = quad;
  out.error = std::abs(quad - lin);
  out.monotone =
      std::abs(p[2].value - p[1].value) <= std::abs(p[1].value - p[0].value);
  return out;
}

}  // namespace crosskit
