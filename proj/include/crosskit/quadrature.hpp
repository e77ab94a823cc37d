#pragma once

#include <functional>

#include "crosskit/types.hpp"

namespace crosskit {

// Adaptive Gauss-Kronrod 15(7) integration on [a, b]. Splits the interval
// with the largest error estimate until the total satisfies
// max(abs_tol, rel_tol * |value|) or the interval budget runs out.
Complex integrate_gk(const std::function<Complex(double)>& f, double a,
                     double b, double abs_tol, double rel_tol,
                     int max_intervals = 2000);

}  // namespace crosskit
