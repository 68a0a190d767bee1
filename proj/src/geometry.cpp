#include "grushin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grushin/threads.hpp"

namespace grushin {

namespace {

double diff_norm(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

double distance(const Point& x, const Point& y) {
  double dp = diff_norm(x.xp, y.xp);
  double dpp = diff_norm(x.xpp, y.xpp);
  double P = l2_norm(x.xp) * l2_norm(x.xp) + l2_norm(y.xp) * l2_norm(y.xp);
  double val = dp * dp * dp * dp;
  double den = dpp * dpp + P * P;
  if (den > 0.0) val += dpp * dpp * dpp * dpp / den;
  return std::pow(val, 0.25);
}

double rho1(const Point& x, const Point& y) {
  return diff_norm(x.xp, y.xp) + std::sqrt(diff_norm(x.xpp, y.xpp));
}

double rho2(const Point& x, const Point& y) {
  double dpp = diff_norm(x.xpp, y.xpp);
  double den = l2_norm(x.xp) + l2_norm(y.xp);
  double head = diff_norm(x.xp, y.xp);
  if (den == 0.0) {
    if (dpp == 0.0) return head;
    return std::numeric_limits<double>::infinity();
  }
  return head + dpp / den;
}

double ball_volume_model(const Point& x, double r, int n2) {
  int n1 = static_cast<int>(x.xp.size());
  return std::pow(r, n1 + n2) * std::pow(std::max(r, l2_norm(x.xp)), n2);
}

BallBounds ball_volume_bounds(const Point& x, double r, int n2, double c1, double C1) {
  double model = ball_volume_model(x, r, n2);
  return {c1 * model, C1 * model};
}

VolumeEstimate ball_volume_mc(const Point& x, double r, std::uint64_t samples, Rng rng) {
  int n1 = static_cast<int>(x.xp.size());
  int n2 = static_cast<int>(x.xpp.size());
  // Bounding box: |dx'| <= r per coordinate; for dx'' solve
  // u^4 <= r^4 (u^2 + P^2) with the largest attainable P over the ball.
  double xm = l2_norm(x.xp);
  double Pmax = xm * xm + (xm + r) * (xm + r);
  double r4 = r * r * r * r;
  double u2 = 0.5 * (r4 + std::sqrt(r4 * r4 + 4.0 * r4 * Pmax * Pmax));
  double umax = std::sqrt(u2);

  double box_vol = std::pow(2.0 * r, n1) * std::pow(2.0 * umax, n2);
  std::uint64_t hits = 0;
  Point p;
  p.xp.resize(n1);
  p.xpp.resize(n2);
  for (std::uint64_t i = 0; i < samples; ++i) {
    for (int j = 0; j < n1; ++j) p.xp[j] = x.xp[j] + rng.uniform(-r, r);
    for (int j = 0; j < n2; ++j) p.xpp[j] = x.xpp[j] + rng.uniform(-umax, umax);
    if (distance(x, p) <= r) ++hits;
  }
  double frac = static_cast<double>(hits) / static_cast<double>(samples);
  VolumeEstimate est;
  est.value = box_vol * frac;
  est.std_error = box_vol * std::sqrt(std::max(frac * (1.0 - frac), 0.0) /
                                      static_cast<double>(samples));
  return est;
}

double estimate_quasi_constant(const Box& region, int n1, std::uint64_t samples, Rng rng) {
  auto draw = [&]() {
    Vec v(region.lo.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.uniform(region.lo[i], region.hi[i]);
    return Point::from_flat(v, n1);
  };
  // Degenerate triple z = x: ratio is exactly 1, so the estimate never
  // undershoots the trivial lower bound.
  double best = 1.0;
  std::string arg;
  for (std::uint64_t i = 0; i < samples; ++i) {
    Point x = draw(), y = draw(), z = draw();
    double num = distance(x, y);
    double den = distance(x, z) + distance(z, y);
    if (num <= 0.0 || den <= 0.0) continue;
    best = std::max(best, num / den);
  }
  return best;
}

double Partition::chi_raw(std::size_t J, const Point& x) const {
  return chi_bump(distance(centers_[J], x));
}

double Partition::chi(std::size_t J, const Point& x) const {
  double num = chi_raw(J, x);
  if (num == 0.0) return 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < centers_.size(); ++k) den += chi_raw(k, x);
  return num / den;
}

double Partition::chi_sum(const Point& x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < centers_.size(); ++k) s += chi(k, x);
  return s;
}

Partition build_partition(const Box& region, double C0, int n1) {
  int dims = static_cast<int>(region.lo.size());
  double a = 1.0 / (4.0 * C0);
  // d-adapted lattice: step a along x', step a^2 along x'' (the distance
  // scales like the square root of x''-displacements near x' = 0).
  std::vector<std::vector<double>> axes(dims);
  for (int i = 0; i < dims; ++i) {
    double step = i < n1 ? a : a * a;
    int count = static_cast<int>(std::floor((region.hi[i] - region.lo[i]) / step + 1e-9)) + 1;
    axes[i].reserve(count);
    for (int k = 0; k < count; ++k) axes[i].push_back(region.lo[i] + k * step);
  }

  Partition part;
  part.C0_ = C0;
  std::vector<int> idx(dims, 0);
  double min_sep = 1.0 / C0;
  for (;;) {
    Vec v(dims);
    for (int i = 0; i < dims; ++i) v[i] = axes[i][idx[i]];
    Point cand = Point::from_flat(v, n1);
    bool ok = true;
    for (const Point& c : part.centers_) {
      if (distance(c, cand) < min_sep) {
        ok = false;
        break;
      }
    }
    if (ok) part.centers_.push_back(cand);
    // advance mixed-radix counter (last coordinate fastest)
    int i = dims - 1;
    while (i >= 0) {
      if (++idx[i] < static_cast<int>(axes[i].size())) break;
      idx[i] = 0;
      --i;
    }
    if (i < 0) break;
  }
  return part;
}

IntegrabilityReport integrability_check(double s, int n1, int n2, const std::vector<Point>& ys,
                                        int doublings, double base_half_width) {
  IntegrabilityReport rep;
  rep.s = s;
  rep.Q = n1 + 2 * n2;

  int dims = n1 + n2;
  // lattice resolution per box (x' cells divisible by 4, x'' cells by 8 so
  // that the previous box boundary falls on cell edges)
  int np_prime = dims <= 2 ? 256 : 48;
  int np_second = dims <= 2 ? 256 : 64;

  int boxes = doublings + 1;
  std::size_t ny = ys.size();
  rep.partials.assign(ny, std::vector<double>(boxes, 0.0));

  // slot (iy, k): shell integral of box_k minus box_{k-1} (full box for k=0)
  std::vector<double> shells(ny * boxes, 0.0);
  parallel_for(ny * boxes, [&](std::size_t slot) {
    std::size_t iy = slot / boxes;
    int k = static_cast<int>(slot % boxes);
    const Point& y = ys[iy];
    double W = base_half_width * std::ldexp(1.0, k);
    double Win = k > 0 ? W / 2.0 : 0.0;

    Vec lo(dims), hi(dims), h(dims);
    for (int i = 0; i < dims; ++i) {
      double c = i < n1 ? 0.0 : y.xpp[i - n1];
      double half = i < n1 ? W : W * W;
      lo[i] = c - half;
      hi[i] = c + half;
      h[i] = (hi[i] - lo[i]) / (i < n1 ? np_prime : np_second);
    }
    double cell = 1.0;
    for (int i = 0; i < dims; ++i) cell *= h[i];

    std::vector<int> counts(dims);
    for (int i = 0; i < dims; ++i) counts[i] = i < n1 ? np_prime : np_second;
    std::vector<int> idx(dims, 0);
    double total = 0.0;
    for (;;) {
      Vec v(dims);
      bool inside_inner = k > 0;
      for (int i = 0; i < dims; ++i) {
        v[i] = lo[i] + (idx[i] + 0.5) * h[i];
        if (k > 0) {
          double c = i < n1 ? 0.0 : y.xpp[i - n1];
          double half = i < n1 ? Win : Win * Win;
          if (std::abs(v[i] - c) > half) inside_inner = false;
        }
      }
      if (!inside_inner) {
        Point x = Point::from_flat(v, n1);
        double vol = ball_volume_model(x, 1.0, n2);
        total += cell / std::sqrt(vol) * std::pow(1.0 + distance(x, y), -s);
      }
      int i = dims - 1;
      while (i >= 0) {
        if (++idx[i] < counts[i]) break;
        idx[i] = 0;
        --i;
      }
      if (i < 0) break;
    }
    shells[slot] = total;
  });

  bool all_pass = true;
  std::ostringstream oss;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    double running = 0.0;
    for (int k = 0; k < boxes; ++k) {
      running += shells[iy * boxes + k];
      rep.partials[iy][k] = running;
    }
    rep.sup_over_y = std::max(rep.sup_over_y, running);
    // Cauchy criterion: relative increments shrink and the final one is small.
    double r1 = shells[iy * boxes + boxes - 2] / rep.partials[iy][boxes - 2];
    double r2 = shells[iy * boxes + boxes - 1] / rep.partials[iy][boxes - 1];
    bool ok = r2 < r1 && r2 <= 1e-3;
    oss << "y[" << iy << "]: total=" << rep.partials[iy][boxes - 1] << " rel_incr=" << r2
        << (ok ? " (converging)" : " (not converging)") << "\n";
    all_pass = all_pass && ok;
  }
  rep.pass = all_pass;
  rep.detail = oss.str();
  return rep;
}

}  // namespace grushin
