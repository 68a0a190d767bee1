#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "grushin/bump.hpp"
#include "grushin/rng.hpp"
#include "grushin/symbol.hpp"  // Vec, norms

namespace grushin {

/// A point x = (x', x'') of R^{n1} x R^{n2}.
struct Point {
  Vec xp;   // x'
  Vec xpp;  // x''

  Vec flat() const {
    Vec out = xp;
    out.insert(out.end(), xpp.begin(), xpp.end());
    return out;
  }
  static Point from_flat(const Vec& v, int n1) {
    Point p;
    p.xp.assign(v.begin(), v.begin() + n1);
    p.xpp.assign(v.begin() + n1, v.end());
    return p;
  }
};

/// Axis-aligned box in (x', x'') coordinates.
struct Box {
  Vec lo, hi;  // length n1 + n2
};

struct GeometryConstants {
  double C0 = 1.0;  // quasi-metric constant
  double c1 = 1.0;  // ball-growth lower constant
  double C1 = 1.0;  // ball-growth upper constant
  int Q = 0;        // homogeneous dimension n1 + 2 n2
};

/// Smooth-off-diagonal control distance surrogate:
///   d(x,y) = ( |x'-y'|^4 + |x''-y''|^4 / (|x''-y''|^2 + (|x'|^2+|y'|^2)^2) )^{1/4}.
double distance(const Point& x, const Point& y);

/// Comparison quasi-distances rho1 = |dx'| + |dx''|^{1/2} and
/// rho2 = |dx'| + |dx''| / (|x'| + |y'|) (+infinity when the denominator is 0
/// and x'' != y'').
double rho1(const Point& x, const Point& y);
double rho2(const Point& x, const Point& y);

/// Two-sided volume-growth bounds c1 r^{n1+n2} max{r,|x'|}^{n2} <= |B| <= C1 (same).
struct BallBounds {
  double lower = 0.0, upper = 0.0;
};
BallBounds ball_volume_bounds(const Point& x, double r, int n2, double c1, double C1);

/// Monte-Carlo ball volume with reported standard error (deterministic given rng).
struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
};
VolumeEstimate ball_volume_mc(const Point& x, double r, std::uint64_t samples, Rng rng);

/// Convenient smooth volume surrogate used where only the growth order
/// matters: r^{n1+n2} max{r, |x'|}^{n2}.
double ball_volume_model(const Point& x, double r, int n2);

/// Max over sampled triples in the region of d(x,y)/(d(x,z)+d(z,y)); a
/// degenerate triple (z = x) is always included so the estimate is >= 1.
double estimate_quasi_constant(const Box& region, int n1, std::uint64_t samples, Rng rng);

/// Greedy partition of unity subordinate to a maximal packing of d-balls.
class Partition {
 public:
  const std::vector<Point>& centers() const { return centers_; }
  double C0() const { return C0_; }

  /// chi_J(x) = chi(d(x_J,x)) / sum_{J'} chi(d(x_{J'},x)) with chi the shared
  /// plateau cutoff (==1 on [-1,1], supported in [-2,2]).
  double chi(std::size_t J, const Point& x) const;

  /// Raw numerator chi(d(x_J, x)) (vanishes outside B(x_J, 2)).
  double chi_raw(std::size_t J, const Point& x) const;

  /// Sum over J of chi_J (1 where the covering is complete).
  double chi_sum(const Point& x) const;

  friend Partition build_partition(const Box& region, double C0, int n1);

 private:
  std::vector<Point> centers_;
  double C0_ = 1.0;
};

/// Greedy maximal packing: candidate centers iterate over a deterministic
/// d-adapted lattice (spacing 1/(4 C0) in x', squared in x''), accepting a
/// center iff its distance to every accepted center is >= 1/C0. Centers are
/// returned in deterministic (lattice) order.
Partition build_partition(const Box& region, double C0, int n1);

/// Convergence check for sup_y int |B(x,1)|^{-1/2} (1 + d(x,y))^{-s} dx over
/// d-adapted expanding boxes centered at (0, y'').
struct IntegrabilityReport {
  bool pass = false;
  double s = 0.0;
  int Q = 0;
  double sup_over_y = 0.0;
  std::vector<std::vector<double>> partials;  // per y, per box
  std::string detail;
};
IntegrabilityReport integrability_check(double s, int n1, int n2, const std::vector<Point>& ys,
                                        int doublings = 8, double base_half_width = 4.0);

}  // namespace grushin
