#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "grushin/symbol.hpp"

using namespace grushin;

TEST_CASE("Littlewood-Paley family: supports and partition of unity") {
  auto lp = make_littlewood_paley();

  // supports
  CHECK(lp.psi1(0.5) == 0.0);
  CHECK(lp.psi1(2.0) == 0.0);
  CHECK(lp.psi1(1.0) > 0.0);
  CHECK(lp.psi0(0.0) == 1.0);
  CHECK(lp.psi0(1.0) == 0.0);
  CHECK(lp.psi0(3.0) == 0.0);
  for (double eta : {0.6, 1.0, 1.4, 1.9}) CHECK((lp.psi1(eta) >= 0.0 && lp.psi1(eta) <= 1.0));

  // eta = 0: only psi_0 covers it
  CHECK(lp.psi(0, 0.0) == 1.0);
  for (int l = 1; l <= 8; ++l) CHECK(lp.psi(l, 0.0) == 0.0);

  // eta = 3: partition with at most two nonzero terms among l >= 1
  {
    double total = lp.psi0(3.0);
    int nonzero = 0;
    for (int l = 1; l <= 12; ++l) {
      double v = lp.psi(l, 3.0);
      total += v;
      if (v != 0.0) nonzero++;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(nonzero <= 2);
  }

  // telescoping at eta = 2^j: exactly terms l = j, j+1 can be nonzero
  for (int j = 1; j <= 5; ++j) {
    double eta = std::ldexp(1.0, j);
    double total = 0.0;
    for (int l = 1; l <= 12; ++l) {
      double v = lp.psi(l, eta);
      if (v != 0.0) CHECK((l == j || l == j + 1));
      total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  }

  // dense probe grid: partition exactness over [0, 2^{L-1}] for l <= L
  {
    const int L = 8;
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      double eta = std::ldexp(1.0, L - 1) * i / 9999.0;
      double s = 0.0;
      for (int l = 0; l <= L; ++l) s += lp.psi(l, eta);
      worst = std::max(worst, std::abs(1.0 - s));
    }
    CHECK(worst <= 1e-12);
  }

  // dyadic sum over all integers equals 1 for |kappa| = 1 (zeta transparency)
  CHECK(lp.zeta(8, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  // complement identity: zeta^S + tail = 1
  for (double k : {0.3, 1.0, 2.7}) {
    double zs = lp.zeta(1, k);
    double tail = 0.0;
    for (int j = 2; j <= 40; ++j) tail += lp.psi1(std::ldexp(k, j));
    CHECK(zs + tail == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("seminorm: oracle symbols") {
  // m == 1: all derivatives vanish, sup|m| = 1 for sigma = 0
  {
    auto m = make_builtin_symbol("constant", {{"value", 1.0}});
    SymbolClassParams p{0.0, 1.0, 0.0, 2};
    auto probes = default_probes(m.arity, 1, 1, 64.0, {3.0, 3.0}, 3, 12);
    auto rep = seminorm(m, p, probes, 1, 1);
    CHECK(rep.value == doctest::Approx(1.0).epsilon(1e-10));
  }

  // m(eta) = (1+eta)^{-1}, sigma=0, rho=1, delta=0: weighted derivatives are
  // exactly l! (1+eta)^{l-1-l} ... -> analytic sup equals max over probes of
  // (1+eta)^l * l! (1+eta)^{-1-l} = l!/(1+eta); sup at eta=0 equals max l! = N!
  {
    auto m = make_builtin_symbol("power-decay", {{"exponent", 1.0}});
    SymbolClassParams p{0.0, 1.0, 0.0, 3};
    auto probes = default_probes(m.arity, 1, 1, 64.0, {3.0, 3.0}, 3, 24);
    auto rep = seminorm(m, p, probes, 1, 1);
    CHECK(rep.value == doctest::Approx(6.0).epsilon(1e-8));  // 3! at eta = 0
    // monotone in N
    SymbolClassParams p2 = p;
    p2.N = 2;
    auto rep2 = seminorm(m, p2, probes, 1, 1);
    CHECK(rep2.value <= rep.value + 1e-12);
  }

  // m(x,eta) = sin(x_1)(1+eta)^{-1/2}: finite S^0_{0,0} seminorm; the
  // FD-based value must match the analytic-derivative evaluation within 1%
  {
    auto m = make_builtin_symbol("sinusoidal-x", {{"exponent", 0.5}});
    SymbolClassParams p{0.0, 0.0, 0.0, 2};
    auto probes = default_probes(m.arity, 1, 1, 64.0, {3.0, 3.0}, 5, 16);
    auto rep_fd = seminorm(m, p, probes, 1, 1);
    SymbolFn manalytic = m;  // keep analytic eta-derivatives
    SymbolFn mfd = m;
    mfd.eta_derivative = nullptr;
    auto rep_an = seminorm(manalytic, p, probes, 1, 1);
    auto rep_f2 = seminorm(mfd, p, probes, 1, 1);
    CHECK(rep_f2.value == doctest::Approx(rep_an.value).epsilon(0.01));
    CHECK(rep_fd.value < 10.0);
    CHECK(rep_fd.skipped == 0);
  }

  // scale covariance probe: for m_t(eta) = m(t eta) the first-derivative
  // weighted sup picks up the chain-rule factor t (checked at rho = -1 so the
  // weight is scale-free)
  {
    double t = 4.0;
    SymbolFn m;
    m.arity = SymbolArity::eta;
    m.eval_eta = [](const Vec&, double eta) { return std::sin(eta); };
    SymbolFn mt;
    mt.arity = SymbolArity::eta;
    mt.eval_eta = [t](const Vec&, double eta) { return std::sin(t * eta); };
    SymbolClassParams p{0.0, -1.0, 0.0, 1};
    auto probes = default_probes(m.arity, 1, 1, 8.0, {}, 1, 200);
    auto a = seminorm(m, p, probes, 1, 1);
    auto b = seminorm(mt, p, probes, 1, 1);
    CHECK(b.value == doctest::Approx(t * a.value).epsilon(0.02));
  }
}

TEST_CASE("dyadic pieces") {
  auto lp = make_littlewood_paley();
  SymbolFn m = make_builtin_symbol("heat", {{"t", 0.05}});

  // pieces sum back to m where the partition is complete
  const int L = 6;
  std::vector<SymbolFn> pieces;
  for (int l = 0; l <= L; ++l) pieces.push_back(dyadic_piece(m, l, lp, DyadicVariant::tau_l1));
  for (double t : {0.0, 0.7, 3.0, 14.0, 31.0}) {
    Vec tau{t};
    Vec kappa{1.0};
    double s = 0.0;
    for (const auto& pc : pieces) s += pc({}, tau, kappa);
    CHECK(s == doctest::Approx(m({}, tau, kappa)).epsilon(1e-12));
  }

  // support: piece_l vanishes at |tau|_1 = 2^{l+2}
  for (int l = 1; l <= 5; ++l) {
    Vec tau{std::ldexp(1.0, l + 2)};
    CHECK(pieces[l]({}, tau, {1.0}) == 0.0);
  }

  // adjacent support: piece_l * piece_l' == 0 pointwise for |l-l'| > 2
  for (int l = 0; l <= L; ++l)
    for (int lp2 = 0; lp2 <= L; ++lp2) {
      if (std::abs(l - lp2) <= 2) continue;
      for (double t : {0.3, 1.0, 2.5, 6.0, 12.0, 25.0, 50.0}) {
        CHECK(pieces[l]({}, {t}, {1.0}) * pieces[lp2]({}, {t}, {1.0}) == 0.0);
      }
    }

  // separable path stays consistent with the plain evaluator
  for (const auto& pc : pieces) {
    REQUIRE(pc.separable());
    for (double t : {0.4, 5.0, 20.0}) {
      CHECK(pc({}, {t}, {2.0}) ==
            doctest::Approx(pc.spatial({}) * pc.spectral_tk({t}, {2.0})).epsilon(1e-14));
    }
  }
}

TEST_CASE("kappa cutoff") {
  auto lp = make_littlewood_paley();
  SymbolFn m = make_builtin_symbol("heat", {{"t", 0.1}});

  // transparency at |kappa| = 1 for large S
  auto mc = kappa_cutoff(m, 10, lp);
  CHECK(mc({}, {2.0}, {1.0}) == doctest::Approx(m({}, {2.0}, {1.0})).epsilon(1e-13));

  // zeta^S <= 1 everywhere
  for (double k : {0.01, 0.3, 1.0, 3.0, 77.0}) CHECK(lp.zeta(3, k) <= 1.0 + 1e-14);

  // spatial window: output vanishes where chi vanishes
  auto chi = [](const Vec& x) { return chi_bump(l2_norm(x)); };
  auto mw = kappa_cutoff(m, 10, lp, chi);
  CHECK(mw(Vec{5.0, 0.0}, {2.0}, {1.0}) == 0.0);
  CHECK(mw(Vec{0.1, 0.0}, {2.0}, {1.0}) ==
        doctest::Approx(m({}, {2.0}, {1.0})).epsilon(1e-13));
}

TEST_CASE("cancellation condition") {
  std::vector<double> path{0.5, 0.25, 0.1, 0.05, 0.02, 0.01};

  // (sin kappa)^4 * bump(|tau|) passes at order 3
  {
    auto m = make_builtin_symbol("sin-kappa-power",
                                 {{"power", 4.0}, {"tau_lo", 0.0}, {"tau_hi", 64.0}});
    auto rep = check_cancellation(m, 3, path, 1, 1);
    CHECK(rep.pass);
  }

  // kappa-independent nonzero symbol fails at beta = 0
  {
    auto m = make_builtin_symbol("heat", {{"t", 0.1}});
    auto rep = check_cancellation(m, 0, path, 1, 1);
    CHECK_FALSE(rep.pass);
  }

  // |kappa|^2-type symbol passes order 1, fails order 2
  {
    SymbolFn m;
    m.arity = SymbolArity::tau_kappa;
    m.eval_tk = [](const Vec&, const Vec& tau, const Vec& kappa) {
      double k2 = 0.0;
      for (double k : kappa) k2 += k * k;
      return k2 * std::exp(-l1_norm(tau));
    };
    auto r1 = check_cancellation(m, 1, path, 1, 1);
    CHECK(r1.pass);
    auto r2 = check_cancellation(m, 2, path, 1, 1);
    CHECK_FALSE(r2.pass);
  }
}
