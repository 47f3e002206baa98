#include "hpfl/lambert_w.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hpfl {

namespace {

constexpr double kInvE = 1.0 / std::numbers::e;

// Branch-point series in p = +-sqrt(2 (e z + 1)).
double branch_series(double p) {
  return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p - 43.0 / 540.0 * p * p * p * p;
}

double halley(double z, double w) {
  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - z;
    if (f == 0.0) break;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == 0.0 || !std::isfinite(denom)) break;
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) break;
  }
  return w;
}

}  // namespace

double lambert_w0(double z) {
  if (std::isnan(z) || z < -kInvE) throw std::domain_error("lambert_w0: argument below -1/e");
  if (z == 0.0) return 0.0;
  if (z == -kInvE) return -1.0;
  if (std::isinf(z)) return z;
  double w;
  if (z < -0.25) {
    w = branch_series(std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * z + 1.0))));
  } else if (z < 3.0) {
    w = std::log1p(z);
    w = w > 0.0 ? w * (1.0 - std::log1p(w) / (2.0 + w)) : w;
  } else {
    const double l1 = std::log(z);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  return halley(z, w);
}

double lambert_wm1(double z) {
  if (std::isnan(z) || z < -kInvE || z >= 0.0) throw std::domain_error("lambert_wm1: argument outside [-1/e, 0)");
  if (z == -kInvE) return -1.0;
  double w;
  if (z < -0.25) {
    w = branch_series(-std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * z + 1.0))));
  } else {
    const double l1 = std::log(-z);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  }
  return halley(z, w);
}

}  // namespace hpfl
