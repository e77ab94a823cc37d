#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "crosskit/errors.hpp"
#include "crosskit/types.hpp"

namespace crosskit {

// Neumaier compensated accumulator; order-deterministic sums that stay
// reproducible across thread counts when reduced over a fixed index order.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class CompensatedComplexSum {
 public:
  void add(Complex z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  Complex value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

// Static-chunk parallel loop. Every index is computed by the same arithmetic
// path regardless of the thread count, so outputs written per-index are
// bitwise reproducible. The first exception (in chunk order) is rethrown on
// the calling thread.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(1, threads)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body, &err = errors[w]] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const std::exception_ptr& err : errors)
    if (err) std::rethrow_exception(err);
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = a;
    return g;
  }
  double h = (b - a) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + h * static_cast<double>(i);
  return g;
}

// Cubic spline with not-a-knot ends; exact for cubics, used to put sampled
// potentials on integration grids.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(const std::vector<double>& x, const std::vector<double>& y);

  double operator()(double x) const;
  double derivative(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::size_t interval(double x) const;
  std::vector<double> x_, y_, b_, c_, d_;  // y[i] + b dx + c dx^2 + d dx^3
};

inline CubicSpline::CubicSpline(const std::vector<double>& x,
                                const std::vector<double>& y)
    : x_(x), y_(y) {
  std::size_t n = x.size();
  if (n < 3 || y.size() != n)
    throw Error(ErrorKind::InvalidPotential, "greens_core",
                "spline needs at least 3 samples");
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];

  // second derivatives sigma from continuity plus not-a-knot end rows:
  //   h1 s0 - (h0+h1) s1 + h0 s2 = 0,  mirrored on the right.
  // The end rows are folded into the first/last interior equations, leaving a
  // tridiagonal system for s1..s_{n-2}.
  std::vector<double> sigma(n, 0.0);
  if (n == 3) {
    // both knot conditions coincide; the spline is the interpolating parabola
    double r = 6.0 * ((y[2] - y[1]) / h[1] - (y[1] - y[0]) / h[0]);
    sigma[0] = sigma[1] = sigma[2] = r / (3.0 * (h[0] + h[1]));
  } else {
    std::size_t m = n - 2;  // unknowns s1..s_{n-2}
    std::vector<double> sub(m, 0.0), diag(m, 0.0), sup(m, 0.0), rhs(m, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      std::size_t r = i - 1;
      sub[r] = h[i - 1];
      diag[r] = 2.0 * (h[i - 1] + h[i]);
      sup[r] = h[i];
      rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    // fold s0 = ((h0+h1) s1 - h0 s2)/h1 into the first row
    diag[0] += h[0] * (h[0] + h[1]) / h[1];
    sup[0] -= h[0] * h[0] / h[1];
    // fold s_{n-1} = ((h_{n-2}+h_{n-3}) s_{n-2} - h_{n-2} s_{n-3})/h_{n-3}
    diag[m - 1] += h[n - 2] * (h[n - 2] + h[n - 3]) / h[n - 3];
    sub[m - 1] -= h[n - 2] * h[n - 2] / h[n - 3];

    for (std::size_t i = 1; i < m; ++i) {  // Thomas
      double f = sub[i] / diag[i - 1];
      diag[i] -= f * sup[i - 1];
      rhs[i] -= f * rhs[i - 1];
    }
    std::vector<double> s(m);
    s[m - 1] = rhs[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;)
      s[i] = (rhs[i] - sup[i] * s[i + 1]) / diag[i];
    for (std::size_t i = 0; i < m; ++i) sigma[i + 1] = s[i];
    sigma[0] = ((h[0] + h[1]) * sigma[1] - h[0] * sigma[2]) / h[1];
    sigma[n - 1] = ((h[n - 2] + h[n - 3]) * sigma[n - 2] -
                    h[n - 2] * sigma[n - 3]) / h[n - 3];
  }

  b_.resize(n - 1);
  c_.resize(n - 1);
  d_.resize(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    b_[i] =
        (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * sigma[i] + sigma[i + 1]) / 6.0;
    c_[i] = sigma[i] / 2.0;
    d_[i] = (sigma[i + 1] - sigma[i]) / (6.0 * h[i]);
  }
}

inline std::size_t CubicSpline::interval(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = static_cast<std::size_t>(
      std::max<std::ptrdiff_t>(0, (it - x_.begin()) - 1));
  return std::min(i, x_.size() - 2);
}

inline double CubicSpline::operator()(double x) const {
  std::size_t i = interval(x);
  double dx = x - x_[i];
  return y_[i] + dx * (b_[i] + dx * (c_[i] + dx * d_[i]));
}

inline double CubicSpline::derivative(double x) const {
  std::size_t i = interval(x);
  double dx = x - x_[i];
  return b_[i] + dx * (2.0 * c_[i] + dx * 3.0 * d_[i]);
}

}  // namespace crosskit
