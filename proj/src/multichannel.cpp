#include "crosskit/multichannel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "crosskit/errors.hpp"
#include "crosskit/util.hpp"

namespace crosskit {

namespace {

constexpr char kModule[] = "multichannel";

const Complex kI{0.0, 1.0};

void check_masses(const MultiChannelSystem& sys) {
  for (const ChannelSpec& ch : sys.channels)
    if (ch.potential.mass != sys.driver.mass)
      throw Error(ErrorKind::InvalidPotential, kModule,
                  "all channels must share the driver mass");
}

GreenEvaluator driver_eval(const MultiChannelSystem& sys) {
  return GreenEvaluator::for_potential(sys.driver, sys.convention,
                                       sys.numeric_step);
}

GreenEvaluator channel_eval(const MultiChannelSystem& sys, std::size_t eps) {
  return GreenEvaluator::for_potential(sys.channels[eps].potential,
                                       sys.convention, sys.numeric_step);
}

}  // namespace

std::vector<EffectiveWeight> effective_weights(EnergyPoint omega,
                                               const MultiChannelSystem& sys) {
  check_masses(sys);
  std::vector<EffectiveWeight> out;
  out.reserve(sys.channels.size());
  for (std::size_t e = 0; e < sys.channels.size(); ++e) {
    const ChannelSpec& ch = sys.channels[e];
    const Complex g = channel_eval(sys, e)(ch.point, ch.point, omega);
    out.push_back({e, ch.strength * ch.strength * g});
  }
  return out;
}

DressedGreen::DressedGreen(GreenEvaluator driver, EnergyPoint omega,
                           std::vector<double> points, Eigen::MatrixXcd matrix,
                           double condition)
    : driver_(std::move(driver)),
      omega_(omega),
      points_(std::move(points)),
      matrix_(std::move(matrix)),
      condition_(condition) {}

Complex DressedGreen::operator()(double x, double x0) const {
  Complex g = driver_(x, x0, omega_);
  const Eigen::Index n = matrix_.rows();
  if (n == 0) return g;
  Eigen::VectorXcd f(n), b(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    f(p) = driver_(x, points_[static_cast<std::size_t>(p)], omega_);
    b(p) = driver_(points_[static_cast<std::size_t>(p)], x0, omega_);
  }
  return g + (f.transpose() * (matrix_ * b)).value();
}

DressedGreen dress_sequential(const MultiChannelSystem& sys,
                              EnergyPoint omega) {
  check_masses(sys);
  GreenEvaluator gd = driver_eval(sys);
  const std::vector<EffectiveWeight> weights = effective_weights(omega, sys);
  const Eigen::Index n = static_cast<Eigen::Index>(sys.channels.size());
  std::vector<double> xs(sys.channels.size());
  for (std::size_t e = 0; e < sys.channels.size(); ++e)
    xs[e] = sys.channels[e].point;

  Eigen::MatrixXcd bare(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index l = 0; l <= j; ++l) {
      bare(j, l) = gd(xs[static_cast<std::size_t>(j)],
                      xs[static_cast<std::size_t>(l)], omega);
      bare(l, j) = bare(j, l);
    }

  // phi_s(x) = G^(s-1)(x, x_s) expanded over the bare kernels G0(x, x_l);
  // P(s, j) = phi_s(x_j), rows of B hold the expansion coefficients
  Eigen::MatrixXcd P(n, n), B = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXcd c(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    P.row(s) = bare.row(s);
    B(s, s) = 1.0;
    for (Eigen::Index l = 0; l < s; ++l) {
      const Complex m = c(l) * P(l, s);
      P.row(s) += m * P.row(l);
      B.row(s) += m * B.row(l);
    }
    const Complex d = 1.0 - weights[static_cast<std::size_t>(s)].weight * P(s, s);
    if (std::abs(d) <= 1e-14)
      throw Error(ErrorKind::PoleError, kModule,
                  "stage " + std::to_string(s) +
                      " denominator vanishes; omega sits on a dressed pole");
    c(s) = weights[static_cast<std::size_t>(s)].weight / d;
  }

  Eigen::MatrixXcd S = B.transpose() * c.asDiagonal() * B;
  return DressedGreen(std::move(gd), omega, std::move(xs), std::move(S), 1.0);
}

DressedGreen dress_direct(const MultiChannelSystem& sys, EnergyPoint omega) {
  check_masses(sys);
  GreenEvaluator gd = driver_eval(sys);
  const std::vector<EffectiveWeight> weights = effective_weights(omega, sys);

  // channels attached to exactly equal points act as one summed weight
  std::vector<double> ys;
  std::vector<Complex> wm;
  for (std::size_t e = 0; e < sys.channels.size(); ++e) {
    const double p = sys.channels[e].point;
    auto it = std::find(ys.begin(), ys.end(), p);
    if (it == ys.end()) {
      ys.push_back(p);
      wm.push_back(weights[e].weight);
    } else {
      wm[static_cast<std::size_t>(it - ys.begin())] += weights[e].weight;
    }
  }

  const Eigen::Index m = static_cast<Eigen::Index>(ys.size());
  if (m == 0)
    return DressedGreen(std::move(gd), omega, {}, Eigen::MatrixXcd(0, 0), 1.0);
  Eigen::MatrixXcd a(m, m);
  for (Eigen::Index p = 0; p < m; ++p)
    for (Eigen::Index q = 0; q <= p; ++q) {
      a(p, q) = gd(ys[static_cast<std::size_t>(p)],
                   ys[static_cast<std::size_t>(q)], omega);
      a(q, p) = a(p, q);
    }
  Eigen::VectorXcd w(m);
  for (Eigen::Index p = 0; p < m; ++p) w(p) = wm[static_cast<std::size_t>(p)];

  Eigen::MatrixXcd system =
      Eigen::MatrixXcd::Identity(m, m) - a * w.asDiagonal();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15))
    throw Error(ErrorKind::SingularSystem, kModule,
                "dressing system is singular; omega sits on a dressed pole");
  Eigen::MatrixXcd S =
      w.asDiagonal() * lu.solve(Eigen::MatrixXcd::Identity(m, m));
  return DressedGreen(std::move(gd), omega, std::move(ys), std::move(S),
                      1.0 / rcond);
}

Complex channel_amplitude(std::size_t eps, double x, EnergyPoint omega,
                          const MultiChannelSystem& sys,
                          Complex psi1_at_point) {
  if (eps >= sys.channels.size())
    throw Error(ErrorKind::DomainError, kModule, "channel index out of range");
  const ChannelSpec& ch = sys.channels[eps];
  return ch.strength * channel_eval(sys, eps)(x, ch.point, omega) *
         psi1_at_point;
}

ScatterResult scatter_multi(double E, const MultiChannelSystem& sys) {
  check_masses(sys);
  if (sys.driver.kind != PotentialKind::Constant)
    throw Error(ErrorKind::NonConstantAsymptotics, kModule,
                "scattering amplitudes need a constant driver potential");
  for (const ChannelSpec& ch : sys.channels) {
    if (ch.potential.kind != PotentialKind::Constant)
      throw Error(ErrorKind::NonConstantAsymptotics, kModule,
                  "scattering amplitudes need constant channel potentials");
    if (ch.strength.imag() != 0.0)
      throw Error(ErrorKind::DomainError, kModule,
                  "scattering amplitudes need real coupling strengths");
  }
  if (sys.convention != GreenConvention::Retarded)
    throw Error(ErrorKind::DomainError, kModule,
                "scattering amplitudes need the retarded convention");
  const double mass = sys.driver.mass;
  const double v1 = sys.driver.v0;
  if (!(E > v1))
    throw Error(ErrorKind::ClosedEntranceChannel, kModule,
                "driver channel is closed at this energy");
  const double k1 = std::sqrt(2.0 * mass * (E - v1));

  const std::size_t nch = sys.channels.size();
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t e = 0; e < nch; ++e)
    groups[sys.channels[e].point].push_back(e);
  std::vector<double> pts;
  pts.reserve(groups.size());
  for (const auto& [p, members] : groups) pts.push_back(p);
  const std::size_t np = pts.size();

  // unknowns: one outgoing driver source amplitude s_p per distinct point,
  // one outgoing channel amplitude q_e per channel
  const Eigen::Index dim = static_cast<Eigen::Index>(np + nch);
  Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(dim, dim);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim);

  std::vector<Complex> kch(nch);
  for (std::size_t e = 0; e < nch; ++e)
    kch[e] = momentum(Complex(E, 0.0), sys.channels[e].potential.v0, mass);

  for (std::size_t p = 0; p < np; ++p) {
    // derivative jump of psi1 at the point balances the channel pull
    mat(p, p) = 2.0 * kI * k1;
    for (std::size_t e : groups[pts[p]])
      mat(p, static_cast<Eigen::Index>(np + e)) =
          -2.0 * mass * sys.channels[e].strength.real();
  }
  for (std::size_t e = 0; e < nch; ++e) {
    const Eigen::Index row = static_cast<Eigen::Index>(np + e);
    const double xe = sys.channels[e].point;
    const double ke0 = sys.channels[e].strength.real();
    mat(row, row) = 2.0 * kI * kch[e];
    for (std::size_t p = 0; p < np; ++p)
      mat(row, static_cast<Eigen::Index>(p)) =
          -2.0 * mass * ke0 * std::exp(kI * k1 * std::abs(xe - pts[p]));
    rhs(row) = 2.0 * mass * ke0 * std::exp(kI * k1 * xe);
  }

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(mat);
  if (!(lu.rcond() > 1e-15))
    throw Error(ErrorKind::SingularSystem, kModule,
                "matching system is singular at this energy");
  Eigen::VectorXcd sol = lu.solve(rhs);

  ScatterResult res;
  Complex r = 0.0, t = 1.0;
  for (std::size_t p = 0; p < np; ++p) {
    r += sol(static_cast<Eigen::Index>(p)) * std::exp(kI * k1 * pts[p]);
    t += sol(static_cast<Eigen::Index>(p)) * std::exp(-kI * k1 * pts[p]);
  }
  res.r = r;
  res.t = t;
  res.R = std::norm(r);
  res.T = std::norm(t);
  res.flux_sum = res.R + res.T;
  for (std::size_t e = 0; e < nch; ++e) {
    const Complex q = sol(static_cast<Eigen::Index>(np + e));
    const double xe = sys.channels[e].point;
    res.channel_amplitudes.push_back(
        {q * std::exp(kI * kch[e] * xe), q * std::exp(-kI * kch[e] * xe)});
    const bool open = E > sys.channels[e].potential.v0;
    const double tr = open ? kch[e].real() / k1 * 2.0 * std::norm(q) : 0.0;
    res.transfer.push_back(tr);
    res.flux_sum += tr;
  }
  return res;
}

WaveField make_gaussian_packet(double center, double sigma, double k0,
                               const std::vector<double>& grid) {
  if (!(sigma > 0.0))
    throw Error(ErrorKind::DomainError, kModule, "packet width must be positive");
  WaveField field;
  field.grid = grid;
  field.values.resize(grid.size());
  const double norm = std::pow(2.0 * M_PI * sigma * sigma, -0.25);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double dx = grid[j] - center;
    field.values[j] = norm * std::exp(Complex(-dx * dx / (4.0 * sigma * sigma),
                                              k0 * grid[j]));
  }
  return field;
}

namespace {

struct PacketGeometry {
  double h = 0.0;
  std::vector<double> tw;  // trapezoid weights
};

PacketGeometry packet_geometry(const WaveField& psi0) {
  const std::size_t m = psi0.grid.size();
  if (m < 8 || psi0.values.size() != m)
    throw Error(ErrorKind::DomainError, kModule,
                "initial wave needs a grid of at least 8 matching points");
  PacketGeometry geo;
  geo.h = psi0.grid[1] - psi0.grid[0];
  if (!(geo.h > 0.0))
    throw Error(ErrorKind::DomainError, kModule,
                "initial grid must increase");
  for (std::size_t j = 1; j + 1 < m; ++j) {
    const double d = psi0.grid[j + 1] - psi0.grid[j];
    if (std::abs(d - geo.h) > 1e-9 * geo.h)
      throw Error(ErrorKind::DomainError, kModule,
                  "initial grid must be uniform");
  }
  geo.tw.assign(m, geo.h);
  geo.tw.front() = 0.5 * geo.h;
  geo.tw.back() = 0.5 * geo.h;
  return geo;
}

// first two moments of H in the packet, with a compact-support finite-
// difference kinetic term. The subtracted reference poles sit at
// <H> +- sqrt(Var H) with half weight each, which matches the resolvent
// through 1/omega^3 and makes the band-edge tails fall off as 1/omega^4;
// the moments only steer a subtraction that is added back exactly, so
// modest accuracy is enough.
std::pair<double, double> reference_moments(const MultiChannelSystem& sys,
                                            const WaveField& psi0,
                                            const PacketGeometry& geo,
                                            double s0) {
  const std::size_t m = psi0.grid.size();
  const double mass = sys.driver.mass;
  std::vector<double> v(m, 0.0);
  switch (sys.driver.kind) {
    case PotentialKind::Constant:
      std::fill(v.begin(), v.end(), sys.driver.v0);
      break;
    case PotentialKind::Linear:
      for (std::size_t j = 0; j < m; ++j)
        v[j] = sys.driver.v0 + sys.driver.slope * psi0.grid[j];
      break;
    case PotentialKind::Sampled: {
      std::vector<double> xs(sys.driver.samples.size()),
          vs(sys.driver.samples.size());
      for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = sys.driver.samples[i].first;
        vs[i] = sys.driver.samples[i].second;
      }
      const CubicSpline spline(xs, vs);
      for (std::size_t j = 0; j < m; ++j)
        v[j] = spline(std::clamp(psi0.grid[j], spline.x_min(), spline.x_max()));
      break;
    }
  }
  CompensatedSum first;
  CompensatedSum second;
  const double h2 = geo.h * geo.h;
  for (std::size_t j = 0; j < m; ++j) {
    const Complex left = j > 0 ? psi0.values[j - 1] : Complex(0.0);
    const Complex right = j + 1 < m ? psi0.values[j + 1] : Complex(0.0);
    const Complex lap = (left - 2.0 * psi0.values[j] + right) / h2;
    const Complex hpsi = -lap / (2.0 * mass) + v[j] * psi0.values[j];
    first.add(geo.tw[j] * (std::conj(psi0.values[j]) * hpsi).real());
    second.add(geo.tw[j] * std::norm(hpsi));
  }
  const double mean = first.value() / s0;
  const double var = std::max(0.0, second.value() / s0 - mean * mean);
  return {mean, std::sqrt(var)};
}

}  // namespace

TimeDomainResult time_reconstruct(const MultiChannelSystem& sys,
                                  const WaveField& psi0,
                                  const std::vector<double>& times,
                                  const FrequencyGrid& grid,
                                  const TimeReconstructOptions& opts) {
  check_masses(sys);
  if (!(opts.eta > 0.0))
    throw Error(ErrorKind::DomainError, kModule,
                "contour height must be positive");
  if (times.empty() || !std::is_sorted(times.begin(), times.end()) ||
      times.front() < 0.0)
    throw Error(ErrorKind::DomainError, kModule,
                "times must be sorted and nonnegative");
  if (grid.count < 16 || !(grid.omega_max > grid.omega_min))
    throw Error(ErrorKind::DomainError, kModule,
                "frequency grid needs at least 16 increasing points");
  const double dw =
      (grid.omega_max - grid.omega_min) / static_cast<double>(grid.count - 1);
  const double t_max = times.back();
  if (t_max > 0.0 && dw > M_PI / t_max)
    throw Error(ErrorKind::GridTooCoarse, kModule,
                "frequency spacing exceeds the Nyquist bound pi/t_max");

  const PacketGeometry geo = packet_geometry(psi0);
  const std::size_t m = psi0.grid.size();
  CompensatedSum norm_acc;
  for (std::size_t j = 0; j < m; ++j)
    norm_acc.add(geo.tw[j] * std::norm(psi0.values[j]));
  const double s0 = norm_acc.value();
  if (!(s0 > 0.0))
    throw Error(ErrorKind::DomainError, kModule, "initial wave is empty");
  const auto [e_ref, spread] = reference_moments(sys, psi0, geo, s0);

  const bool want_fields = !opts.field_times.empty();
  const std::size_t n_omega = grid.count;
  const int threads = std::max(1, opts.threads);
  const double mass = sys.driver.mass;
  const bool fast_driver = sys.driver.kind == PotentialKind::Constant;

  std::vector<Complex> amp(n_omega);
  const std::size_t n_chunks = 64;
  std::vector<std::vector<Complex>> field_partials;
  if (want_fields)
    field_partials.assign(n_chunks,
                          std::vector<Complex>(opts.field_times.size() * m,
                                               Complex(0.0)));

  // one fixed chunk decomposition regardless of thread count, so reductions
  // combine in one deterministic order
  parallel_for(n_chunks, threads, [&](std::size_t chunk) {
    const std::size_t lo = chunk * n_omega / n_chunks;
    const std::size_t hi = (chunk + 1) * n_omega / n_chunks;
    std::vector<Complex> i0(m), wave(want_fields ? m : 0);
    for (std::size_t i = lo; i < hi; ++i) {
      const EnergyPoint z{grid.omega_min + static_cast<double>(i) * dw,
                          opts.eta};
      const Complex zc(z);
      const DressedGreen dressed = dress_direct(sys, z);
      const std::vector<double>& ys = dressed.correction_points();
      const Eigen::Index nc = dressed.correction_matrix().rows();

      // i0 = integral of G0(x_j, y) psi0(y) dy over the packet grid
      Eigen::VectorXcd i0_pts(nc);
      std::vector<Complex> j_pts(static_cast<std::size_t>(nc));
      if (fast_driver) {
        const Complex k = momentum_continued(zc, sys.driver.v0, mass);
        const Complex pref = mass / (kI * k);
        std::vector<Complex> up(m), dn(m);
        for (std::size_t j = 0; j < m; ++j) {
          up[j] = std::exp(kI * k * psi0.grid[j]);
          dn[j] = std::exp(-kI * k * psi0.grid[j]);
        }
        Complex lsum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          lsum += geo.tw[j] * psi0.values[j] * dn[j];
          i0[j] = lsum * up[j];
        }
        Complex rsum = 0.0;
        for (std::size_t j = m; j-- > 0;) {
          i0[j] = pref * (i0[j] + rsum * dn[j]);
          rsum += geo.tw[j] * psi0.values[j] * up[j];
        }
        for (Eigen::Index p = 0; p < nc; ++p) {
          const double yp = ys[static_cast<std::size_t>(p)];
          Complex acc_i = 0.0, acc_j = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            const Complex g =
                pref * std::exp(kI * k * std::abs(yp - psi0.grid[j]));
            acc_i += geo.tw[j] * psi0.values[j] * g;
            acc_j += geo.tw[j] * std::conj(psi0.values[j]) * g;
          }
          i0_pts(p) = acc_i;
          j_pts[static_cast<std::size_t>(p)] = acc_j;
        }
      } else {
        const GreenEvaluator& gd = dressed.driver();
        for (std::size_t j = 0; j < m; ++j) {
          Complex acc = 0.0;
          for (std::size_t l = 0; l < m; ++l)
            acc += geo.tw[l] * psi0.values[l] * gd(psi0.grid[j], psi0.grid[l], z);
          i0[j] = acc;
        }
        for (Eigen::Index p = 0; p < nc; ++p) {
          const double yp = ys[static_cast<std::size_t>(p)];
          Complex acc_i = 0.0, acc_j = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            const Complex g = gd(yp, psi0.grid[j], z);
            acc_i += geo.tw[j] * psi0.values[j] * g;
            acc_j += geo.tw[j] * std::conj(psi0.values[j]) * g;
          }
          i0_pts(p) = acc_i;
          j_pts[static_cast<std::size_t>(p)] = acc_j;
        }
      }

      const Eigen::VectorXcd u = dressed.correction_matrix() * i0_pts;
      Complex a_val = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        a_val += geo.tw[j] * std::conj(psi0.values[j]) * i0[j];
      for (Eigen::Index p = 0; p < nc; ++p)
        a_val += j_pts[static_cast<std::size_t>(p)] * u(p);
      amp[i] = kI * a_val;

      if (want_fields) {
        const GreenEvaluator& gd = dressed.driver();
        for (std::size_t j = 0; j < m; ++j) {
          Complex w = i0[j];
          for (Eigen::Index p = 0; p < nc; ++p)
            w += gd(psi0.grid[j], ys[static_cast<std::size_t>(p)], z) * u(p);
          wave[j] = kI * w;
        }
        const double qw = (i == 0 || i + 1 == n_omega) ? 0.5 * dw : dw;
        for (std::size_t ft = 0; ft < opts.field_times.size(); ++ft) {
          const double t = opts.field_times[ft];
          const Complex phase = qw * std::polar(1.0, -z.re * t);
          Complex* row = field_partials[chunk].data() + ft * m;
          for (std::size_t j = 0; j < m; ++j)
            row[j] += phase *
                      (wave[j] - kI * psi0.values[j] / (zc - e_ref));
        }
      }
    }
  });

  TimeDomainResult result;
  result.times = times;
  result.reference_energy = e_ref;
  result.amplitude.resize(times.size());
  result.survival.resize(times.size());

  parallel_for(times.size(), threads, [&](std::size_t k) {
    const double t = times[k];
    CompensatedComplexSum acc;
    for (std::size_t i = 0; i < n_omega; ++i) {
      const double w = grid.omega_min + static_cast<double>(i) * dw;
      const double qw = (i == 0 || i + 1 == n_omega) ? 0.5 * dw : dw;
      const Complex zc(w, opts.eta);
      const Complex pole = kI * s0 * 0.5 *
                           (1.0 / (zc - (e_ref - spread)) +
                            1.0 / (zc - (e_ref + spread)));
      acc.add(qw * std::polar(1.0, -w * t) * (amp[i] - pole));
    }
    const Complex a =
        s0 * std::polar(1.0, -e_ref * t) * std::cos(spread * t) +
        std::exp(opts.eta * t) / (2.0 * M_PI) * acc.value();
    result.amplitude[k] = a;
    result.survival[k] = std::norm(a);
  });

  if (want_fields) {
    for (std::size_t ft = 0; ft < opts.field_times.size(); ++ft) {
      const double t = opts.field_times[ft];
      WaveField field;
      field.component = 0;
      field.grid = psi0.grid;
      field.tag = t;
      field.values.resize(m);
      const double lift = std::exp(opts.eta * t) / (2.0 * M_PI);
      for (std::size_t j = 0; j < m; ++j) {
        CompensatedComplexSum acc;
        for (std::size_t chunk = 0; chunk < n_chunks; ++chunk)
          acc.add(field_partials[chunk][ft * m + j]);
        field.values[j] = psi0.values[j] * std::polar(1.0, -e_ref * t) +
                          lift * acc.value();
      }
      result.fields.push_back(std::move(field));
    }
  }
  return result;
}

}  // namespace crosskit
