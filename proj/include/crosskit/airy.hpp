#pragma once

#include <complex>

namespace crosskit::airy {

using Complex = std::complex<double>;

struct AiryValue {
  Complex ai;
  Complex aip;  // dAi/dz
};

// Scaled form: ai = mantissa * exp(-zeta) with zeta = (2/3) z^{3/2} on the
// principal branch; keeps products of huge/tiny Airy values representable.
struct ScaledAiryValue {
  Complex ai_m;
  Complex aip_m;
  Complex zeta;
};

// Complex Airy function of the first kind on the whole plane.
// Maclaurin series with double-double accumulation for |z| <= 9, optimally
// truncated asymptotic series beyond, one connection-formula rotation for
// |arg z| > 2pi/3 + 0.05. Worst case ~1e-13 relative against 40-digit
// reference values.
AiryValue airy_ai(Complex z);
ScaledAiryValue airy_ai_scaled(Complex z);

}  // namespace crosskit::airy
