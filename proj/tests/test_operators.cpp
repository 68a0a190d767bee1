#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "grushin/operators.hpp"

using namespace grushin;
using cplx = std::complex<double>;

namespace {

DiscPtr test_disc() {
  DiscretizationParams p;
  p.n1 = 1;
  p.n2 = 1;
  p.K = 16;
  p.Mp = 160;
  p.Mpp = 32;
  p.Lambda = 8;
  p.Lp = 9.0;
  return Discretization::create(p);
}

DiscPtr hermite_disc() {
  DiscretizationParams p;
  p.n1 = 1;
  p.n2 = 0;
  p.K = 16;
  p.Mp = 160;
  p.Lp = 9.0;
  return Discretization::create(p);
}

/// Basis element Phi_nu^lambda(x') e^{-i lambda x''} sampled on the grid.
GridFunction basis_element(const DiscPtr& d, const MultiIndex& nu, double lam) {
  return GridFunction::sample(d, [&](const Vec& x) {
    Vec xp(x.begin(), x.begin() + d->n1());
    double phi = scaled_hermite(nu, std::abs(lam), xp);
    if (d->n2() == 0) return cplx(phi, 0.0);
    return phi * std::exp(cplx(0.0, -lam * x[d->n1()]));
  });
}

double grid_diff(const GridFunction& a, const GridFunction& b) {
  GridFunction r = a;
  r.values -= b.values;
  return r.norm();
}

SymbolFn wrap_x_dependent_eta(const SymbolFn& m) {
  SymbolFn w;
  w.arity = SymbolArity::x_eta;
  w.eval_eta = [m](const Vec& x, double eta) { return m(x, eta); };
  return w;
}

}  // namespace

TEST_CASE("forward/backward: basis elements, roundtrip, Parseval") {
  auto d = test_disc();
  CHECK(d->max_gram_error() <= 1e-8);

  // a basis element maps to a unit coefficient
  for (auto [k, lam] : {std::pair<int, double>{0, 1.0}, {3, -2.0}, {16, 8.0}, {7, -8.0}}) {
    MultiIndex nu{{k}};
    GridFunction f = basis_element(d, nu, lam);
    TransformStats ts;
    SpectralField F = forward(f, &ts);
    double off = 0.0;
    for (std::size_t a = 0; a < F.coeffs.size(); ++a) {
      for (std::size_t i = 0; i < F.coeffs[a].idx->size(); ++i) {
        cplx c = F.coeffs[a].v[i];
        bool is_target = d->lambdas()[a] == lam && F.coeffs[a].idx->at(i).entries[0] == k;
        if (is_target) {
          CHECK(std::abs(c - 1.0) <= 1e-8);
        } else {
          off = std::max(off, std::abs(c));
        }
      }
    }
    CHECK(off <= 1e-8);
    CHECK(ts.dropped_fraction <= 1e-8);
  }

  // roundtrip is the band projection (idempotent)
  Rng rng(11);
  GridFunction g = GridFunction::sample(d, [&](const Vec& x) {
    return cplx(std::exp(-x[0] * x[0]) * std::cos(3.0 * x[1]),
                std::sin(x[1]) * std::exp(-0.5 * x[0] * x[0]));
  });
  GridFunction p1 = backward(forward(g));
  GridFunction p2 = backward(forward(p1));
  CHECK(grid_diff(p1, p2) <= 1e-8 * (1.0 + p1.norm()));

  // Parseval on random band-limited fields
  for (int trial = 0; trial < 5; ++trial) {
    SpectralField F = SpectralField::random(d, rng);
    GridFunction f = backward(F);
    CHECK(f.norm() == doctest::Approx(F.norm()).epsilon(1e-8));
    SpectralField F2 = forward(f);
    double err = 0.0;
    for (std::size_t a = 0; a < F.coeffs.size(); ++a)
      err = std::max(err, (F2.coeffs[a].v - F.coeffs[a].v).cwiseAbs().maxCoeff());
    CHECK(err <= 1e-8);
  }
}

TEST_CASE("hermite pseudo-multiplier") {
  auto d = hermite_disc();
  Rng rng(22);
  SpectralField F = SpectralField::random(d, rng);
  GridFunction f = backward(F);

  // m == 1 is the band projection
  SymbolFn one;
  one.arity = SymbolArity::eta;
  one.eval_eta = [](const Vec&, double) { return 1.0; };
  CHECK(grid_diff(apply_hermite_pseudo(one, f), f) <= 1e-10 * f.norm());

  // m = eta^2 reproduces the oscillator eigenvalues
  SymbolFn sq;
  sq.arity = SymbolArity::eta;
  sq.eval_eta = [](const Vec&, double eta) { return eta * eta; };
  for (int k : {0, 4, 16}) {
    GridFunction phi = basis_element(d, MultiIndex{{k}}, 1.0);
    GridFunction out = apply_hermite_pseudo(sq, phi);
    GridFunction want = phi;
    want.values *= 2.0 * k + 1.0;
    CHECK(grid_diff(out, want) <= 1e-8 * want.norm());
  }

  // eta-independent m = a(x) is plain multiplication after band projection
  SymbolFn ax;
  ax.arity = SymbolArity::x_eta;
  ax.eval_eta = [](const Vec& x, double) { return std::sin(x[0]); };
  GridFunction out = apply_hermite_pseudo(ax, f);
  GridFunction want = f;  // f is already band-limited
  for (Eigen::Index i = 0; i < want.values.size(); ++i)
    want.values[i] *= std::sin(d->x_full(i)[0]);
  CHECK(grid_diff(out, want) <= 1e-9 * (1.0 + want.norm()));
}

TEST_CASE("grushin pseudo-multiplier: shell extraction and path consistency") {
  auto d = test_disc();

  // f with exactly two (shell, lambda) components
  GridFunction f = basis_element(d, MultiIndex{{2}}, 1.0);  // eigenvalue (2*2+1)*1 = 5
  GridFunction g = basis_element(d, MultiIndex{{3}}, -4.0);  // eigenvalue 7*4 = 28
  f.values += g.values;

  // smoothed bump selecting eigenvalue 5 in mode G
  SymbolFn sel;
  sel.arity = SymbolArity::eta;
  sel.eval_eta = [](const Vec&, double eta) { return plateau_bump(eta, 3.0, 7.0, 1.5); };
  GridFunction out = apply_grushin_pseudo(sel, f, GrushinMode::G);
  SpectralField O = forward(out);
  for (std::size_t a = 0; a < O.coeffs.size(); ++a)
    for (std::size_t i = 0; i < O.coeffs[a].idx->size(); ++i) {
      cplx c = O.coeffs[a].v[i];
      bool keep = d->lambdas()[a] == 1.0 && O.coeffs[a].idx->at(i).entries[0] == 2;
      if (keep)
        CHECK(std::abs(c - 1.0) <= 1e-8);
      else
        CHECK(std::abs(c) <= 1e-8);
    }

  // x-independent symbol through the shell-by-shell path matches the diagonal
  Rng rng(33);
  SpectralField F = SpectralField::random(d, rng);
  GridFunction h = backward(F);
  SymbolFn m = make_builtin_symbol("power-decay", {{"exponent", 0.7}});
  for (GrushinMode mode : {GrushinMode::sqrtG, GrushinMode::G}) {
    GridFunction fast = apply_grushin_pseudo(m, h, mode);
    GridFunction slow = apply_grushin_pseudo(wrap_x_dependent_eta(m), h, mode);
    CHECK(grid_diff(fast, slow) <= 1e-10 * (1.0 + fast.norm()));
  }
}

TEST_CASE("joint pseudo-multiplier: reductions and path consistency") {
  auto d = test_disc();
  Rng rng(44);
  SpectralField F = SpectralField::random(d, rng);
  GridFunction f = backward(F);

  // m == 1 band projection
  SymbolFn one;
  one.arity = SymbolArity::tau_kappa;
  one.eval_tk = [](const Vec&, const Vec&, const Vec&) { return 1.0; };
  CHECK(grid_diff(apply_joint_pseudo(one, f), f) <= 1e-10 * f.norm());

  // m(tau, kappa) = G(|tau|_1) agrees with the Grushin route in mode G
  SymbolFn joint;
  joint.arity = SymbolArity::tau_kappa;
  joint.eval_tk = [](const Vec&, const Vec& tau, const Vec&) {
    return std::exp(-0.05 * l1_norm(tau));
  };
  SymbolFn etaform;
  etaform.arity = SymbolArity::eta;
  etaform.eval_eta = [](const Vec&, double eta) { return std::exp(-0.05 * eta); };
  CHECK(grid_diff(apply_joint_pseudo(joint, f), apply_grushin_pseudo(etaform, f, GrushinMode::G)) <=
        1e-10 * (1.0 + f.norm()));

  // m = kappa_1 acts as -lambda_0 on a plane-wave fiber
  double lam0 = 3.0;
  GridFunction pw = GridFunction::sample(d, [&](const Vec& x) {
    return std::exp(-0.5 * x[0] * x[0]) * std::exp(cplx(0.0, -lam0 * x[1]));
  });
  SymbolFn kap;
  kap.arity = SymbolArity::tau_kappa;
  kap.eval_tk = [](const Vec&, const Vec&, const Vec& kappa) { return kappa[0]; };
  GridFunction out = apply_joint_pseudo(kap, pw);
  GridFunction proj = backward(forward(pw));
  proj.values *= -lam0;
  CHECK(grid_diff(out, proj) <= 1e-8 * (1.0 + proj.norm()));

  // general x-dependent path vs diagonal path for an x-independent symbol
  SymbolFn wrapped;
  wrapped.arity = SymbolArity::x_tau_kappa;
  wrapped.eval_tk = joint.eval_tk;
  CHECK(grid_diff(apply_joint_pseudo(wrapped, f), apply_joint_pseudo(joint, f)) <=
        1e-10 * (1.0 + f.norm()));

  // separable fast path vs general path
  SymbolFn sep;
  sep.arity = SymbolArity::x_tau_kappa;
  sep.spatial = [](const Vec& x) { return std::cos(x[0]) + 2.0; };
  sep.spectral_tk = [](const Vec& tau, const Vec&) { return std::exp(-0.1 * l1_norm(tau)); };
  sep.eval_tk = [&](const Vec& x, const Vec& tau, const Vec& kappa) {
    return (std::cos(x[0]) + 2.0) * std::exp(-0.1 * l1_norm(tau));
  };
  SymbolFn sep_general = sep;
  sep_general.spatial = nullptr;
  sep_general.spectral_tk = nullptr;
  CHECK(grid_diff(apply_joint_pseudo(sep, f), apply_joint_pseudo(sep_general, f)) <=
        1e-10 * (1.0 + f.norm()));
}

TEST_CASE("spectral algebra invariants: composition, self-adjointness") {
  auto d = test_disc();
  Rng rng(55);
  SpectralField F = SpectralField::random(d, rng);
  SpectralField G = SpectralField::random(d, rng);

  SymbolFn m1 = make_builtin_symbol("power-decay", {{"exponent", 0.5}});
  SymbolFn m2;
  m2.arity = SymbolArity::eta;
  m2.eval_eta = [](const Vec&, double eta) { return std::sin(eta) + 2.0; };
  SymbolFn m12;
  m12.arity = SymbolArity::eta;
  m12.eval_eta = [&](const Vec& x, double eta) { return m1(x, eta) * m2(x, eta); };

  // composition is exact in coefficient space
  SpectralField A = F, B = F;
  scale_grushin_diagonal(m1, GrushinMode::sqrtG, A);
  scale_grushin_diagonal(m2, GrushinMode::sqrtG, A);
  scale_grushin_diagonal(m12, GrushinMode::sqrtG, B);
  for (std::size_t a = 0; a < A.coeffs.size(); ++a)
    CHECK((A.coeffs[a].v - B.coeffs[a].v).cwiseAbs().maxCoeff() <= 1e-14);

  // self-adjointness of a real x-independent multiplier
  SpectralField TF = F, TG = G;
  scale_grushin_diagonal(m2, GrushinMode::sqrtG, TF);
  scale_grushin_diagonal(m2, GrushinMode::sqrtG, TG);
  cplx lhs = backward(TF).dot(backward(G));
  cplx rhs = backward(F).dot(backward(TG));
  CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
}

TEST_CASE("Fourier-inversion route") {
  auto d = test_disc();
  FourierInversionQuad q;

  // smooth compactly supported symbol
  SymbolFn m;
  m.arity = SymbolArity::eta;
  m.eval_eta = [](const Vec&, double eta) {
    return std::exp(-0.5 * eta * eta) * chi_bump(eta / 3.0);
  };

  // eigenfunction: output is m(sqrt(eigenvalue)) times the input
  for (auto [k, lam] : {std::pair<int, double>{1, 1.0}, {4, 2.0}}) {
    GridFunction phi = basis_element(d, MultiIndex{{k}}, lam);
    GridFunction out = apply_via_fourier_inversion(m, phi, q);
    GridFunction want = phi;
    want.values *= m({}, std::sqrt((2.0 * k + 1.0) * std::abs(lam)));
    CHECK(grid_diff(out, want) <= 1e-6 * (1.0 + want.norm()));
  }

  // cross-route agreement with the spectral definition on test elements
  Rng rng(66);
  SpectralField F = SpectralField::random(d, rng);
  GridFunction f = backward(F);
  GridFunction via_fourier = apply_via_fourier_inversion(m, f, q);
  GridFunction via_spectral = apply_grushin_pseudo(m, f, GrushinMode::sqrtG);
  CHECK(grid_diff(via_fourier, via_spectral) <= 1e-4 * (1.0 + via_spectral.norm()));

  // measured constant in ||T f|| <= C R sum_{j<=2} sup |d^j m| ||f||
  double sup01 = 0.0;
  double hfd = 1e-4;
  for (int i = 0; i <= 4000; ++i) {
    double eta = -q.R + 2.0 * q.R * i / 4000.0;
    double v0 = std::abs(m({}, eta));
    double v1 = std::abs(m({}, eta + hfd) - m({}, eta - hfd)) / (2.0 * hfd);
    double v2 = std::abs(m({}, eta + hfd) - 2.0 * m({}, eta) + m({}, eta - hfd)) / (hfd * hfd);
    sup01 = std::max({sup01, v0, v1, v2});
  }
  double C = via_fourier.norm() / (q.R * 3.0 * sup01 * f.norm());
  CHECK(C <= 10.0);

  // non-compact support is rejected
  SymbolFn bad = make_builtin_symbol("power-decay", {{"exponent", 1.0}});
  CHECK_THROWS_AS(apply_via_fourier_inversion(bad, f, q), std::invalid_argument);

  // x-dependent symbol: agreement with the shell-by-shell spectral route
  SymbolFn mx;
  mx.arity = SymbolArity::x_eta;
  mx.eval_eta = [](const Vec& x, double eta) {
    return (1.0 + 0.5 * std::sin(x[0])) * std::exp(-0.5 * eta * eta) * chi_bump(eta / 3.0);
  };
  GridFunction fx = apply_via_fourier_inversion(mx, f, q);
  GridFunction sx = apply_grushin_pseudo(mx, f, GrushinMode::sqrtG);
  CHECK(grid_diff(fx, sx) <= 1e-4 * (1.0 + sx.norm()));
}

TEST_CASE("kernels: consistency, Hermitian symmetry, translation structure") {
  auto d = test_disc();
  SymbolFn F = make_builtin_symbol("heat", {{"t", 0.2}});

  Rng rng(77);
  SpectralField c = SpectralField::random(d, rng);
  GridFunction f = backward(c);
  GridFunction Tf = apply_joint_pseudo(F, f);

  const int S = d->sec_count();
  std::size_t x_flat = (d->prime_size() / 2) * S + 5;
  Eigen::VectorXcd row = compute_kernel(F, d, x_flat);
  cplx via_kernel = kernel_row_apply(row, f);
  CHECK(std::abs(via_kernel - Tf.values[x_flat]) <= 1e-6 * (1.0 + std::abs(via_kernel)));

  // Hermitian symmetry for the real symbol
  std::size_t y_flat = (d->prime_size() / 3) * S + 11;
  Eigen::VectorXcd row_y = compute_kernel(F, d, y_flat);
  CHECK(std::abs(row[y_flat] - std::conj(row_y[x_flat])) <= 1e-10);

  // x'' translation: same x', shifted x'' indices
  std::size_t x2_flat = x_flat + 3;  // shift x'' by 3 nodes (same prime node)
  Eigen::VectorXcd row2 = compute_kernel(F, d, x2_flat);
  double worst = 0.0;
  for (std::size_t p = 0; p < d->prime_size(); ++p)
    for (int my = 0; my < S; ++my) {
      std::size_t y = p * S + my;
      std::size_t y_shift = p * S + (my + 3) % S;
      worst = std::max(worst, std::abs(row[y] - row2[y_shift]));
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("heat semigroup and kernel positivity") {
  auto d = test_disc();
  Rng rng(88);
  SpectralField F = SpectralField::random(d, rng);
  GridFunction f = backward(F);

  GridFunction two_steps = heat_apply(0.3, heat_apply(0.2, f));
  GridFunction one_step = heat_apply(0.5, f);
  CHECK(grid_diff(two_steps, one_step) <= 1e-8 * (1.0 + one_step.norm()));

  CHECK_THROWS_AS(heat_apply(0.0, f), std::invalid_argument);
  CHECK_THROWS_AS(heat_kernel(-1.0, d, 0), std::invalid_argument);

  // near-diagonal positivity of p_t at moderate times
  const int S = d->sec_count();
  std::size_t x_flat = (d->prime_size() / 2) * S;
  Eigen::VectorXcd p = heat_kernel(0.5, d, x_flat);
  for (int off : {0, 1, 2, -1, -2}) {
    std::size_t y = x_flat + static_cast<std::size_t>(S * off);
    CHECK(p[y].real() > 0.0);
    CHECK(std::abs(p[y].imag()) <= 1e-8 * std::abs(p[y].real()) + 1e-12);
  }
}

TEST_CASE("Bessel-potential Sobolev check") {
  auto d = test_disc();
  const int Q = 3;
  Rng rng(99);

  // single eigenfunction: finite ratio; scaling invariance
  GridFunction phi = basis_element(d, MultiIndex{{2}}, 2.0);
  auto a = bessel_sobolev_check(0.5 * Q + 1.0, phi);
  CHECK(std::isfinite(a.ratio));
  CHECK(a.ratio > 0.0);
  GridFunction phi2 = phi;
  phi2.values *= 17.0;
  auto b = bessel_sobolev_check(0.5 * Q + 1.0, phi2);
  CHECK(b.ratio == doctest::Approx(a.ratio).epsilon(1e-12));

  // band-widening sweep with the extremal function for point evaluation at
  // x' = 0: coefficients (1 + e)^{-s} Phi_mu^lambda(0). Its ratio diverges
  // with the band exactly when s is at or below the embedding threshold Q/2.
  auto extremal_ratio = [&](const DiscPtr& dk, double s) {
    SpectralField F = SpectralField::zero(dk);
    for (std::size_t a2 = 0; a2 < F.coeffs.size(); ++a2) {
      double lam_mag = std::abs(dk->lambdas()[a2]);
      auto& c = F.coeffs[a2];
      for (std::size_t i = 0; i < c.idx->size(); ++i) {
        double e = (2.0 * c.idx->at(i).degree() + dk->n1()) * lam_mag;
        c.v[i] = std::pow(1.0 + e, -s) * scaled_hermite(c.idx->at(i), lam_mag, {0.0});
      }
    }
    return bessel_sobolev_check(s, backward(F)).ratio;
  };
  std::vector<double> good_ratios, bad_ratios;
  for (int step = 0; step < 3; ++step) {
    DiscretizationParams p = d->params();
    p.K = 4 << step;
    p.Lambda = 2 << step;
    auto dk = Discretization::create(p);
    good_ratios.push_back(extremal_ratio(dk, 0.5 * Q + 1.0));
    bad_ratios.push_back(extremal_ratio(dk, 0.25 * Q));
  }
  // above threshold: increments die off (Cauchy-like), total drift stays small
  CHECK(good_ratios[2] / good_ratios[1] < good_ratios[1] / good_ratios[0]);
  CHECK(good_ratios[2] / good_ratios[0] < 1.5);
  // at s = Q/4: geometric growth
  CHECK(bad_ratios[1] > 1.2 * bad_ratios[0]);
  CHECK(bad_ratios[2] > 1.2 * bad_ratios[1]);
}

TEST_CASE("binary container roundtrip") {
  auto d = test_disc();
  Rng rng(123);
  SpectralField F = SpectralField::random(d, rng);
  GridFunction f = backward(F);

  save_grid("/tmp/grushin_test_grid.bin", f);
  GridFunction f2 = load_grid("/tmp/grushin_test_grid.bin", d);
  CHECK((f2.values - f.values).cwiseAbs().maxCoeff() == 0.0);

  save_spectral("/tmp/grushin_test_spec.bin", F);
  SpectralField F2 = load_spectral("/tmp/grushin_test_spec.bin", d);
  for (std::size_t a = 0; a < F.coeffs.size(); ++a)
    CHECK((F2.coeffs[a].v - F.coeffs[a].v).cwiseAbs().maxCoeff() == 0.0);

  // mismatched discretization is rejected
  DiscretizationParams p = d->params();
  p.K = 8;
  auto d2 = Discretization::create(p);
  CHECK_THROWS(load_grid("/tmp/grushin_test_grid.bin", d2));
  CHECK_THROWS(load_spectral("/tmp/grushin_test_spec.bin", d2));

  std::remove("/tmp/grushin_test_grid.bin");
  std::remove("/tmp/grushin_test_spec.bin");
}
