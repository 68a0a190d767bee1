#pragma once

#include <cmath>

namespace grushin {

/// g(t) = e^{-1/t} for t > 0, else 0: the standard C_c^infty building block.
inline double mollifier_g(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

/// Smooth step: 0 for s <= 0, 1 for s >= 1, strictly monotone in between.
inline double smooth_step(double s) {
  double a = mollifier_g(s);
  double b = mollifier_g(1.0 - s);
  return a + b > 0.0 ? a / (a + b) : (s > 0.5 ? 1.0 : 0.0);
}

/// chi in C_c^infty([-2,2]) with chi == 1 on [-1,1], 0 <= chi <= 1.
/// Used both for the partition of unity and as a generic radial cutoff.
inline double chi_bump(double t) {
  double a = std::abs(t);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  return smooth_step(2.0 - a);
}

/// Plateau bump supported in (lo, hi), == 1 on [lo + w, hi - w].
inline double plateau_bump(double t, double lo, double hi, double w) {
  if (t <= lo || t >= hi) return 0.0;
  return smooth_step((t - lo) / w) * smooth_step((hi - t) / w);
}

}  // namespace grushin
