#include "crosskit/airy.hpp"

#include <array>
#include <cmath>

namespace crosskit::airy {
namespace {

// ---- double-double building blocks (error-free transforms via fma) ----

struct DD {
  double hi = 0.0;
  double lo = 0.0;
};

inline DD two_sum(double a, double b) {
  double s = a + b;
  double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

inline DD quick_two_sum(double a, double b) {
  double s = a + b;
  return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
  double p = a * b;
  return {p, std::fma(a, b, -p)};
}

inline DD dd_add(DD x, DD y) {
  DD s = two_sum(x.hi, y.hi);
  return quick_two_sum(s.hi, s.lo + x.lo + y.lo);
}

inline DD dd_neg(DD x) { return {-x.hi, -x.lo}; }

inline DD dd_mul(DD x, DD y) {
  DD p = two_prod(x.hi, y.hi);
  return quick_two_sum(p.hi, p.lo + x.hi * y.lo + x.lo * y.hi);
}

inline DD dd_div_d(DD x, double d) {
  double q1 = x.hi / d;
  DD p = two_prod(q1, d);
  double q2 = ((x.hi - p.hi) - p.lo + x.lo) / d;
  return quick_two_sum(q1, q2);
}

inline DD dd_mul_d(DD x, double d) {
  DD p = two_prod(x.hi, d);
  return quick_two_sum(p.hi, p.lo + x.lo * d);
}

struct CDD {
  DD re, im;
};

inline CDD cdd_from(Complex z) { return {{z.real(), 0.0}, {z.imag(), 0.0}}; }

inline Complex cdd_value(const CDD& x) {
  return {x.re.hi + x.re.lo, x.im.hi + x.im.lo};
}

inline CDD cdd_add(const CDD& x, const CDD& y) {
  return {dd_add(x.re, y.re), dd_add(x.im, y.im)};
}

inline CDD cdd_mul(const CDD& x, const CDD& y) {
  return {dd_add(dd_mul(x.re, y.re), dd_neg(dd_mul(x.im, y.im))),
          dd_add(dd_mul(x.re, y.im), dd_mul(x.im, y.re))};
}

inline CDD cdd_mul_dd(const CDD& x, DD r) {
  return {dd_mul(x.re, r), dd_mul(x.im, r)};
}

// ---- Maclaurin series, Ai(z) = sum c_n z^n, c_{n+3} = c_n/((n+3)(n+2)) ----

constexpr double kAi0Hi = 0.3550280538878172;
constexpr double kAi0Lo = 2.05233632436212e-17;
constexpr double kAip0Hi = -0.2588194037928068;
constexpr double kAip0Lo = 2.522243111610832e-17;

AiryValue series_ai(Complex z) {
  CDD zc = cdd_from(z);
  DD c[3] = {{kAi0Hi, kAi0Lo}, {kAip0Hi, kAip0Lo}, {0.0, 0.0}};
  CDD p = cdd_from(Complex(1.0, 0.0));  // z^n
  CDD pprev = cdd_from(Complex(0.0, 0.0));
  CDD s = cdd_from(Complex(0.0, 0.0));
  CDD sp = cdd_from(Complex(0.0, 0.0));
  const double az = std::abs(z);
  double apn = 1.0;  // |z|^n
  const double floor_abs = 0.7e-36;
  for (int n = 0;; ++n) {
    DD cn = c[n % 3];
    s = cdd_add(s, cdd_mul_dd(p, cn));
    if (n >= 1)
      sp = cdd_add(sp, cdd_mul_dd(pprev, dd_mul_d(cn, static_cast<double>(n))));
    c[n % 3] = dd_div_d(cn, static_cast<double>((n + 3) * (n + 2)));
    pprev = p;
    p = cdd_mul(p, zc);
    apn *= az;
    if (n > 4) {
      double cmax = std::max({std::abs(c[0].hi), std::abs(c[1].hi),
                              std::abs(c[2].hi)});
      double bound = cmax * apn * (az + 1.0) * (az + 1.0);
      double floor = std::max(floor_abs, std::abs(cdd_value(s)) * 1e-35);
      if (bound < floor || n > 400) break;
    }
  }
  return {cdd_value(s), cdd_value(sp)};
}

// ---- asymptotic series, Ai ~ e^{-zeta}/(2 sqrt(pi) z^{1/4}) sum (-u_k/zeta)^k

constexpr int kNAsym = 40;

struct AsymCoeffs {
  std::array<double, kNAsym> u{};
  std::array<double, kNAsym> v{};
  AsymCoeffs() {
    u[0] = 1.0;
    v[0] = 1.0;
    for (int k = 1; k < kNAsym; ++k) {
      u[k] = u[k - 1] * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) /
             ((2.0 * k - 1.0) * 216.0 * k);
      v[k] = u[k] * (6.0 * k + 1.0) / (1.0 - 6.0 * k);
    }
  }
};

const AsymCoeffs kAsym;

constexpr double kTwoSqrtPi = 3.5449077018110320546;  // 2 sqrt(pi)

Complex zeta_of(Complex z) {
  return (2.0 / 3.0) * z * std::sqrt(z);
}

ScaledAiryValue asym_ai_scaled(Complex z) {
  Complex zq = std::pow(z, 0.25);
  Complex zeta = zeta_of(z);
  Complex su = 1.0, sv = 1.0, term = 1.0;
  for (int k = 1; k < kNAsym; ++k) {
    term /= -zeta;
    Complex tu = kAsym.u[k] * term;
    if (std::abs(tu) > std::abs(kAsym.u[k - 1] * term * zeta)) break;
    su += tu;
    sv += kAsym.v[k] * term;
  }
  return {su / (kTwoSqrtPi * zq), -sv * zq / kTwoSqrtPi, zeta};
}

constexpr double kSeriesRadius = 9.0;
constexpr double kSectorLimit = 2.0943951023931953 + 0.05;  // 2pi/3 + margin

const Complex kRotP = std::polar(1.0, 2.0943951023931953);   // e^{+2pi i/3}
const Complex kRotM = std::polar(1.0, -2.0943951023931953);  // e^{-2pi i/3}

ScaledAiryValue scaled_in_sector(Complex z) {
  if (std::abs(z) <= kSeriesRadius) {
    AiryValue v = series_ai(z);
    Complex zeta = zeta_of(z);
    Complex grow = std::exp(zeta);  // |Re zeta| <= 18 here
    return {v.ai * grow, v.aip * grow, zeta};
  }
  return asym_ai_scaled(z);
}

}  // namespace

ScaledAiryValue airy_ai_scaled(Complex z) {
  if (std::abs(z) <= kSeriesRadius || std::abs(std::arg(z)) <= kSectorLimit)
    return scaled_in_sector(z);
  // connection: Ai(z) = -[e^{2pi i/3} Ai(z e^{2pi i/3})
  //                       + e^{-2pi i/3} Ai(z e^{-2pi i/3})]
  ScaledAiryValue a1 = scaled_in_sector(z * kRotP);
  ScaledAiryValue a2 = scaled_in_sector(z * kRotM);
  Complex zeta = zeta_of(z);
  // rebase both children onto exp(-zeta); one rebase factor is ~1, the other
  // ~e^{2 zeta} with Re zeta < 0 in this sector, so nothing overflows
  Complex f1 = std::exp(zeta - a1.zeta);
  Complex f2 = std::exp(zeta - a2.zeta);
  return {-(kRotP * a1.ai_m * f1 + kRotM * a2.ai_m * f2),
          -(kRotP * kRotP * a1.aip_m * f1 + kRotM * kRotM * a2.aip_m * f2),
          zeta};
}

AiryValue airy_ai(Complex z) {
  if (std::abs(z) <= kSeriesRadius) return series_ai(z);
  ScaledAiryValue s = airy_ai_scaled(z);
  Complex damp = std::exp(-s.zeta);
  return {s.ai_m * damp, s.aip_m * damp};
}

}  // namespace crosskit::airy
