#include "imcgl/bumps.hpp"

#include <algorithm>
#include <cmath>

namespace imcgl {

Jet smooth_step(double x, double sigma) {
  if (x <= 0.0) return {0.0, 0.0, 0.0};
  if (x >= 1.0) return {1.0, 0.0, 0.0};
  const double y = 1.0 - x;
  const double p = sigma * (1.0 / x - 1.0 / y);
  if (p > 700.0) return {0.0, 0.0, 0.0};
  if (p < -700.0) return {1.0, 0.0, 0.0};
  const double s = p > 0.0 ? std::exp(-p) / (1.0 + std::exp(-p)) : 1.0 / (1.0 + std::exp(p));
  const double sc = s * (1.0 - s);
  const double dp = -sigma * (1.0 / (x * x) + 1.0 / (y * y));
  const double ddp = 2.0 * sigma * (1.0 / (x * x * x) - 1.0 / (y * y * y));
  const double d1 = -dp * sc;
  const double d2 = -ddp * sc - dp * d1 * (1.0 - 2.0 * s);
  return {s, d1, d2};
}

Jet Transition::operator()(double y) const {
  const double dv = value_hi - value_lo;
  if (scale == Scale::Linear) {
    const double width = hi - lo;
    const Jet s = smooth_step((y - lo) / width, sigma);
    return {value_lo + dv * s.value, dv * s.d1 / width, dv * s.d2 / (width * width)};
  }
  if (y <= lo) return {value_lo, 0.0, 0.0};
  if (y >= hi) return {value_hi, 0.0, 0.0};
  const double width = std::log(hi / lo);
  const double x = std::log(y / lo) / width;
  const double dx = 1.0 / (y * width);
  const double ddx = -1.0 / (y * y * width);
  const Jet s = smooth_step(x, sigma);
  return {value_lo + dv * s.value, dv * s.d1 * dx, dv * (s.d2 * dx * dx + s.d1 * ddx)};
}

ComplexCutoff::Value ComplexCutoff::operator()(std::complex<double> z) const {
  const double r = std::abs(z);
  if (r <= radial.lo) return {z, 1.0, 0.0};
  if (r >= radial.hi) return {0.0, 0.0, 0.0};
  const Jet rho = radial(r);
  return {z * rho.value, rho.value + 0.5 * r * rho.d1, rho.d1 * z * z / (2.0 * r)};
}

double ComplexCutoff::max_modulus() const {
  double best = radial.lo;
  constexpr int kSamples = 20000;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = radial.lo + (radial.hi - radial.lo) * i / kSamples;
    best = std::max(best, r * radial(r).value);
  }
  return best;
}

double ComplexCutoff::max_derivative_norm() const {
  double best = 1.0;
  constexpr int kSamples = 20000;
  for (int i = 0; i <= kSamples; ++i) {
    const double r = radial.lo + (radial.hi - radial.lo) * i / kSamples;
    const Jet rho = radial(r);
    best = std::max(best, std::abs(rho.value + 0.5 * r * rho.d1) + std::abs(0.5 * r * rho.d1));
  }
  return best;
}

double varphi_min_log_width(double sigma) {
  // With x = ln(z/lo)/L and varphi = -S(x)/2: z|varphi'| = S'(x)/(2L).
  double need = 0.0;
  constexpr int kSamples = 200000;
  for (int i = 1; i < kSamples; ++i) {
    const Jet s = smooth_step(double(i) / kSamples, sigma);
    const double slack = std::max(1.0 - s.value, 0.5 * s.value);
    need = std::max(need, s.d1 / (2.0 * slack));
  }
  return need;
}

}  // namespace imcgl
