#include "crosskit/quadrature.hpp"

#include <cmath>
#include <queue>
#include <vector>

#include "crosskit/errors.hpp"

namespace crosskit {

namespace {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1]
constexpr double kNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
};
constexpr double kKronrod[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
};
constexpr double kGauss[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
};

struct Panel {
  double a, b;
  Complex value;
  double error;
};

Panel evaluate(const std::function<Complex(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  Complex kron = kKronrod[7] * f(mid);
  Complex gauss = kGauss[3] * f(mid);
  for (int i = 0; i < 7; ++i) {
    const Complex lo = f(mid - half * kNodes[i]);
    const Complex hi = f(mid + half * kNodes[i]);
    kron += kKronrod[i] * (lo + hi);
    if (i % 2 == 1) gauss += kGauss[i / 2] * (lo + hi);
  }
  Panel p;
  p.a = a;
  p.b = b;
  p.value = kron * half;
  p.error = std::abs((kron - gauss) * half);
  return p;
}

}  // namespace

Complex integrate_gk(const std::function<Complex(double)>& f, double a,
                     double b, double abs_tol, double rel_tol,
                     int max_intervals) {
  if (a == b) return Complex(0.0);
  auto worse = [](const Panel& lhs, const Panel& rhs) {
    return lhs.error < rhs.error;
  };
  std::priority_queue<Panel, std::vector<Panel>, decltype(worse)> queue(worse);
  queue.push(evaluate(f, a, b));
  Complex total = queue.top().value;
  double total_error = queue.top().error;
  int panels = 1;
  while (total_error > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (panels >= max_intervals)
      throw Error(ErrorKind::QuadratureFailure, "quadrature",
                  "interval budget exhausted before reaching tolerance");
    const Panel top = queue.top();
    queue.pop();
    const double mid = 0.5 * (top.a + top.b);
    const Panel left = evaluate(f, top.a, mid);
    const Panel right = evaluate(f, mid, top.b);
    total += left.value + right.value - top.value;
    total_error += left.error + right.error - top.error;
    queue.push(left);
    queue.push(right);
    ++panels;
  }
  return total;
}

}  // namespace crosskit
