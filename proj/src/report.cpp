#include "grushin/report.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "grushin/harness.hpp"
#include "grushin/threads.hpp"

namespace grushin {

namespace {

using ordered_json = nlohmann::ordered_json;

double now_minus(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// -------------------------------------------------------------------------
// verify-hermite
// -------------------------------------------------------------------------
CheckRecord run_verify_hermite(const ExperimentConfig& cfg) {
  CheckRecord c;
  c.name = "verify-hermite";
  auto d = Discretization::create(cfg.disc);

  // orthonormality of every per-lambda basis over the profile band
  c.value("max_gram_error", d->max_gram_error());
  c.require(d->max_gram_error() <= cfg.tol("hermite_gram"), "basis Gram error above tolerance");

  // ladder relations in coefficient space: A_j^* then A_j on e_mu returns
  // (2 mu_j + 2) lambda e_mu
  double worst_ladder = 0.0;
  auto idx = IndexSet::get(cfg.disc.n1, cfg.disc.K);
  for (double lam : {d->lambdas().back(), std::abs(d->lambdas().front())}) {
    for (std::size_t i = 0; i < idx->size(); ++i) {
      const MultiIndex& mu = idx->at(i);
      for (int j = 0; j < cfg.disc.n1; ++j) {
        CoeffVector e = CoeffVector::unit(cfg.disc.n1, cfg.disc.K, mu);
        CoeffVector up = apply_ladder(Ladder::create, j, lam, e);
        CoeffVector down = apply_ladder(Ladder::annihilate, j, lam, up);
        const double want = (2.0 * mu.entries[j] + 2.0) * lam;
        for (std::size_t k = 0; k < down.idx->size(); ++k) {
          std::complex<double> expect = (down.idx->at(k) == mu) ? want : 0.0;
          worst_ladder = std::max(worst_ladder, std::abs(down.v[k] - expect) / want);
        }
      }
    }
  }
  c.value("ladder_residual", worst_ladder);
  c.require(worst_ladder <= cfg.tol("hermite_ladder"), "ladder relation residual above tolerance");

  // lambda-derivative identity: central difference vs the explicit index-shift
  // expansion, plus the second-order step ratio
  const double lam0 = 1.0, h = 1e-4;
  double max_err = 0.0, scale = 1.0;
  std::vector<double> xs{0.3, -0.7, 1.1};
  for (int k = 0; k <= 4; ++k) {
    MultiIndex mu;
    mu.entries.assign(cfg.disc.n1, 0);
    mu.entries[0] = k;
    for (double x : xs) {
      std::vector<double> xp(cfg.disc.n1, 0.4);
      xp[0] = x;
      double cd = (scaled_hermite(mu, lam0 + h, xp) - scaled_hermite(mu, lam0 - h, xp)) / (2.0 * h);
      double rhs = lambda_derivative_rhs(mu, lam0, xp);
      max_err = std::max(max_err, std::abs(cd - rhs));
      scale = std::max(scale, std::abs(rhs));
    }
  }
  c.value("lambda_derivative_residual", max_err / scale);
  c.require(max_err / scale <= cfg.tol("hermite_lambda_derivative"),
            "lambda-derivative residual above tolerance");

  {
    MultiIndex mu;
    mu.entries.assign(cfg.disc.n1, 0);
    mu.entries[0] = 3;
    std::vector<double> xp(cfg.disc.n1, 0.4);
    xp[0] = 0.3;
    auto err_at = [&](double hh) {
      double cd =
          (scaled_hermite(mu, lam0 + hh, xp) - scaled_hermite(mu, lam0 - hh, xp)) / (2.0 * hh);
      return std::abs(cd - lambda_derivative_rhs(mu, lam0, xp));
    };
    double ratio = err_at(2e-3) / err_at(1e-3);
    c.value("lambda_derivative_order_ratio", ratio);
    c.require(ratio >= 3.2 && ratio <= 4.8, "central-difference error is not second order");
  }
  return c;
}

// -------------------------------------------------------------------------
// verify-geometry
// -------------------------------------------------------------------------
Point rand_point(Rng& rng, int n1, int n2, double half) {
  Point p;
  for (int j = 0; j < n1; ++j) p.xp.push_back(rng.uniform(-half, half));
  for (int j = 0; j < n2; ++j) p.xpp.push_back(rng.uniform(-half, half));
  return p;
}

CheckRecord run_verify_geometry(const ExperimentConfig& cfg) {
  CheckRecord c;
  c.name = "verify-geometry";
  const int n1 = cfg.disc.n1, n2 = std::max(cfg.disc.n2, 1);
  const int Q = n1 + 2 * n2;
  Rng rng(cfg.seed);

  // exact identity and symmetry
  double sym = 0.0, ident = 0.0;
  for (int i = 0; i < 2000; ++i) {
    Point x = rand_point(rng, n1, n2, 2.0), y = rand_point(rng, n1, n2, 2.0);
    sym = std::max(sym, std::abs(distance(x, y) - distance(y, x)));
    ident = std::max(ident, distance(x, x));
  }
  c.value("symmetry_error", sym);
  c.value("identity_error", ident);
  c.require(sym == 0.0 && ident == 0.0, "distance symmetry/identity not exact");

  // two-sided comparison with min(rho1, rho2)
  double rmin = 1e300, rmax = 0.0;
  for (int i = 0; i < cfg.geometry_pairs; ++i) {
    Point x = rand_point(rng, n1, n2, 2.0), y = rand_point(rng, n1, n2, 2.0);
    double dd = distance(x, y);
    if (dd == 0.0) continue;
    double r = std::min(rho1(x, y), rho2(x, y)) / dd;
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  c.value("rho_ratio_min", rmin);
  c.value("rho_ratio_max", rmax);
  c.require(rmin >= cfg.tol("geometry_ratio_low") && rmax <= cfg.tol("geometry_ratio_high"),
            "min(rho1, rho2) / d outside the two-sided band");

  // measured quasi-metric constant on a wide sampling box
  Box wide;
  wide.lo.assign(n1 + n2, -6.0);
  wide.hi.assign(n1 + n2, 6.0);
  for (int j = 0; j < n2; ++j) {
    wide.lo[n1 + j] = 0.0;
    wide.hi[n1 + j] = 4.0;
  }
  double C0m = estimate_quasi_constant(wide, n1, 20000, Rng(cfg.seed));
  c.value("quasi_constant_estimate", C0m);
  c.require(C0m <= cfg.cotlar_C0 * 1.001, "measured quasi-constant exceeds the configured C0");

  // partition: separation, coverage, overlap bound, determinism
  Partition part = build_partition(cfg.cotlar_box, cfg.cotlar_C0, n1);
  const auto& cs = part.centers();
  c.value("partition_centers", static_cast<double>(cs.size()));
  double min_sep = 1e300;
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j)
      min_sep = std::min(min_sep, distance(cs[i], cs[j]));
  c.value("partition_min_separation", min_sep);
  c.require(cs.size() < 2 || min_sep >= 1.0 / cfg.cotlar_C0, "packing separation violated");

  double sum_err = 0.0;
  int max_overlap = 0;
  double worst_bound_margin = 1e300;
  const double C0 = part.C0();
  const double r0 = 0.99 / (2.0 * C0 * C0);
  const double R_out = C0 * (2.0 + r0);
  const double c1 = 0.5, C1 = 8.0;
  for (int t = 0; t < 300; ++t) {
    Point x;
    for (std::size_t j = 0; j < cfg.cotlar_box.lo.size(); ++j) {
      double v = rng.uniform(cfg.cotlar_box.lo[j], cfg.cotlar_box.hi[j]);
      if (j < static_cast<std::size_t>(n1)) x.xp.push_back(v);
      else x.xpp.push_back(v);
    }
    sum_err = std::max(sum_err, std::abs(part.chi_sum(x) - 1.0));
    int overlap = 0;
    for (std::size_t j = 0; j < cs.size(); ++j)
      if (part.chi_raw(j, x) > 0.0) ++overlap;
    max_overlap = std::max(max_overlap, overlap);
    double bound = (C1 / c1) * ball_volume_model(x, R_out, n2) / std::pow(r0, Q);
    worst_bound_margin = std::min(worst_bound_margin, bound - overlap);
    c.require(overlap >= 1, "probe point not covered by the partition");
  }
  c.value("partition_sum_error", sum_err);
  c.value("partition_max_overlap", static_cast<double>(max_overlap));
  c.value("partition_overlap_margin", worst_bound_margin);
  c.require(sum_err <= cfg.tol("partition_sum"), "partition of unity does not sum to 1");
  c.require(worst_bound_margin >= 0.0, "overlap count exceeds the volume-counting bound");

  Partition again = build_partition(cfg.cotlar_box, cfg.cotlar_C0, n1);
  bool same = again.centers().size() == cs.size();
  for (std::size_t i = 0; same && i < cs.size(); ++i)
    same = again.centers()[i].xp == cs[i].xp && again.centers()[i].xpp == cs[i].xpp;
  c.require(same, "partition construction is not deterministic");

  // kernel-weight integrability: convergent at s = Q + 1, divergent at Q - 1
  std::vector<Point> ys;
  {
    Point y0;
    y0.xp.assign(n1, 0.0);
    y0.xpp.assign(n2, 0.0);
    ys.push_back(y0);
    Point y1 = y0;
    y1.xp[0] = 1.5;
    ys.push_back(y1);
  }
  IntegrabilityReport good = integrability_check(Q + 1.0, n1, n2, ys, cfg.geometry_doublings);
  IntegrabilityReport bad = integrability_check(Q - 1.0, n1, n2, ys, cfg.geometry_doublings);
  c.value("integrability_sup_Qp1", good.sup_over_y);
  c.value("integrability_sup_Qm1", bad.sup_over_y);
  c.require(good.pass, "weight integral fails to converge at s = Q + 1");
  c.require(!bad.pass, "weight integral not flagged divergent at s = Q - 1");
  return c;
}

// -------------------------------------------------------------------------
// apply
// -------------------------------------------------------------------------
GridFunction sample_input(const DiscPtr& d) {
  const double Lpp = d->params().Lpp;
  const int n1 = d->n1(), n2 = d->n2();
  return GridFunction::sample(d, [n1, n2, Lpp](const std::vector<double>& x) {
    double q = 0.0;
    for (int j = 0; j < n1; ++j) q += x[j] * x[j];
    std::complex<double> v = std::exp(-0.25 * q);
    if (n2 > 0) {
      double ph = 2.0 * 3.14159265358979323846 * x[n1] / Lpp;
      v *= std::complex<double>(std::cos(ph), std::sin(ph));
    }
    return v;
  });
}

CheckRecord run_apply(const ExperimentConfig& cfg) {
  CheckRecord c;
  c.name = "apply";
  auto d = Discretization::create(cfg.disc);
  SymbolFn m = config_symbol(cfg);
  GridFunction f = sample_input(d);

  ApplyStats st;
  GridFunction out = m.eta_form() ? apply_grushin_pseudo(m, f, GrushinMode::sqrtG, &st)
                                  : apply_joint_pseudo(m, f, &st);
  c.value("input_norm", f.norm());
  c.value("output_norm", out.norm());
  c.value("out_of_band_fraction", st.out_of_band_fraction);
  c.require(std::isfinite(out.norm()), "operator output is not finite");

  // the unit symbol reproduces the band projection
  SymbolFn one;
  one.arity = SymbolArity::tau_kappa;
  one.eval_tk = [](const Vec&, const Vec&, const Vec&) { return 1.0; };
  GridFunction band = backward(forward(f));
  GridFunction viaop = apply_joint_pseudo(one, f);
  viaop.values -= band.values;
  double rel = viaop.norm() / std::max(f.norm(), 1e-300);
  c.value("identity_residual", rel);
  c.require(rel <= cfg.tol("apply_identity"), "unit symbol deviates from the band projection");

  if (!cfg.output.dir.empty() && cfg.output.emit_fields) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(cfg.output.dir) / "fields");
    save_grid((fs::path(cfg.output.dir) / "fields" / "apply_input.bin").string(), f);
    save_grid((fs::path(cfg.output.dir) / "fields" / "apply_output.bin").string(), out);
    c.notes.push_back("fields written: fields/apply_input.bin, fields/apply_output.bin");
  }
  return c;
}

// -------------------------------------------------------------------------
// cv
// -------------------------------------------------------------------------
CheckRecord run_cv(const ExperimentConfig& cfg) {
  CheckRecord c;
  c.name = "cv";
  DiscretizationParams base;
  base.n1 = cfg.disc.n1;
  base.n2 = 1;
  base.Mp = cfg.cv_Mp;
  base.Mpp = 32;
  base.Lp = cfg.cv_Lp;

  std::vector<std::pair<int, int>> ladder;
  for (int i = 0; i < cfg.cv_steps; ++i) ladder.emplace_back(cfg.cv_K0 << i, cfg.cv_Lambda0 << i);

  struct Entry {
    std::string tag;
    SymbolFn m;
    SymbolClassParams cls;
    bool stable;
  };
  std::vector<Entry> entries;

  {
    Entry e{"rho1", make_builtin_symbol("constant", {{"value", 0.7}}), {}, true};
    entries.push_back(e);
  }
  {
    // oscillation at the sqrt scale; the occupied supremum sits at the lowest
    // spectral point, so refinements only add smaller values
    SymbolFn m;
    m.arity = SymbolArity::eta;
    m.label = "cos_sqrt_decay";
    m.eval_eta = [](const Vec&, double eta) {
      return std::pow(1.0 + eta, -0.25) * (2.0 + std::cos(std::sqrt(1.0 + eta)));
    };
    SymbolClassParams p;
    p.rho = 0.5;
    Entry e{"rho_half", m, p, true};
    entries.push_back(e);
  }
  {
    // no spectral decay, fourth-order vanishing at kappa = 0; the half-period
    // sine peaks exactly on the smallest lattice |kappa|
    SymbolFn m;
    m.arity = SymbolArity::tau_kappa;
    m.label = "sin_half_period";
    m.eval_tk = [](const Vec&, const Vec& tau, const Vec& kappa) {
      double s = std::sin(1.5707963267948966 * kappa[0]);
      return s * s * s * s * plateau_bump(l1_norm(tau), 0.5, 400.0, 0.25);
    };
    SymbolClassParams p;
    p.rho = 0.0;
    Entry e{"rho0_cancel", m, p, true};
    entries.push_back(e);
  }
  {
    // order-1/2 symbol declared at order 0: the ratio must blow up
    Entry e{"control_growth", make_builtin_symbol("power-growth", {{"exponent", 0.5}}), {}, false};
    entries.push_back(e);
  }

  c.table_header = {"symbol_index", "K", "Lambda", "op_norm", "seminorm", "ratio"};
  for (std::size_t s = 0; s < entries.size(); ++s) {
    const Entry& e = entries[s];
    CvReport r = cv_experiment(e.m, e.cls, base, ladder, cfg.seed, cfg.tol("cv_growth"));
    for (const auto& st : r.steps)
      c.table.push_back({static_cast<double>(s), static_cast<double>(st.K),
                         static_cast<double>(st.Lambda), st.op_norm, st.seminorm, st.ratio});
    c.value("max_growth_" + e.tag, r.max_growth);
    if (e.stable)
      c.require(r.pass, "ratio for '" + e.tag + "' grows beyond the stability tolerance");
    else
      c.require(r.max_growth >= cfg.tol("cv_control_growth"),
                "negative control '" + e.tag + "' fails to show ratio growth");
  }
  return c;
}

// -------------------------------------------------------------------------
// cotlar
// -------------------------------------------------------------------------
SymbolFn cotlar_test_symbol() {
  SymbolFn m;
  m.arity = SymbolArity::tau_kappa;
  m.label = "cotlar_s000";
  m.eval_tk = [](const Vec&, const Vec& tau, const Vec& kappa) {
    double s = std::sin(kappa[0]);
    return s * s * s * s / (1.0 + l1_norm(tau));
  };
  return m;
}

CheckRecord run_cotlar(const ExperimentConfig& cfg) {
  CheckRecord c;
  c.name = "cotlar";
  auto d = Discretization::create(cfg.disc);
  LittlewoodPaleyFamily lp = make_littlewood_paley();
  Partition part = build_partition(cfg.cotlar_box, cfg.cotlar_C0, cfg.disc.n1);
  SymbolFn m = cotlar_test_symbol();
  Pieces pieces = build_pieces(m, part, lp, 0, cfg.cotlar_l_max, cfg.cotlar_S, d);

  NormOptions opt;
  opt.tol = cfg.norm_tol;
  opt.max_iter = cfg.norm_max_iter;
  opt.restarts = cfg.norm_restarts;
  opt.seed = cfg.seed;
  CotlarReport rep = cotlar_matrices(pieces, opt);

  const std::size_t P = pieces.index.size();
  c.value("centers", static_cast<double>(part.centers().size()));
  c.value("pieces", static_cast<double>(P));

  int far_pairs = 0, spec_pairs = 0;
  double worst_far = 0.0, worst_spec = 0.0;
  c.table_header = {"p", "q", "l_p", "l_q", "center_distance", "M1", "M2"};
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = 0; q < P; ++q) {
      double dist = rep.center_distance[p * P + q];
      int dl = std::abs(rep.index[p].l - rep.index[q].l);
      if (dist > 4.0 * cfg.cotlar_C0) {
        ++far_pairs;
        worst_far = std::max(worst_far, rep.M1(p, q));
      }
      if (dl > 2) {
        ++spec_pairs;
        worst_spec = std::max(worst_spec, rep.M2(p, q));
      }
      c.table.push_back({static_cast<double>(p), static_cast<double>(q),
                         static_cast<double>(rep.index[p].l), static_cast<double>(rep.index[q].l),
                         dist, rep.M1(p, q), rep.M2(p, q)});
    }
  c.value("far_pairs", far_pairs);
  c.value("spectral_pairs", spec_pairs);
  c.value("worst_far_M1", worst_far);
  c.value("worst_spectral_M2", worst_spec);
  c.require(far_pairs > 0, "no center pairs beyond 4 C0 (widen the region)");
  c.require(spec_pairs > 0, "no piece pairs with dyadic offset > 2");
  c.require(worst_far <= cfg.tol("cotlar_vanish"), "M1 does not vanish for far pairs");
  c.require(worst_spec <= cfg.tol("cotlar_vanish"), "M2 does not vanish beyond dyadic overlap");

  // dyadic-offset profile: monotone decay beyond the overlap band + fits
  std::vector<double> cj(cfg.cotlar_l_max + 1, 0.0);
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = 0; q < P; ++q) {
      int off = std::abs(rep.index[p].l - rep.index[q].l);
      cj[off] = std::max(cj[off], rep.M1(p, q));
    }
  bool monotone = true;
  for (std::size_t j = 2; j < cj.size(); ++j) monotone = monotone && cj[j] <= cj[j - 1];
  c.value("m1_offset_monotone", monotone ? 1.0 : 0.0);
  c.require(monotone, "dyadic-offset M1 profile is not monotone beyond overlap");
  c.value("m1_vs_l_slope", rep.m1_vs_l.slope);
  c.value("m1_vs_l_r2", rep.m1_vs_l.r2);
  c.value("m2_vs_d_slope", rep.m2_vs_d.slope);
  c.require(rep.m1_vs_l.slope < 0.0, "dyadic-offset M1 profile does not decay");

  // almost-orthogonality bound: || sum of pieces || <= sum_j c(j) with
  // c(j)^2 the max M1 entry at matrix-diagonal offset j (the piece list is
  // ordered deterministically, so the offset runs over the full 2-D index).
  // The sum collapses exactly to M_{chi_sum} following the kappa-cut
  // multiplier with the dyadic factors summed, which costs two applications
  // per iteration instead of one per piece.
  double A = 0.0;
  {
    std::vector<double> dj(P, 0.0);
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t q = p; q < P; ++q) dj[q - p] = std::max(dj[q - p], rep.M1(p, q));
    for (double v : dj) A += std::sqrt(v);
  }
  const int l_max = cfg.cotlar_l_max, S = cfg.cotlar_S;
  SymbolFn msum;
  msum.arity = SymbolArity::tau_kappa;
  msum.eval_tk = [m, lp, l_max, S](const Vec& x, const Vec& tau, const Vec& kappa) {
    double e = m.eval_tk(x, tau, kappa);
    if (e == 0.0) return 0.0;
    double t = l1_norm(tau);
    double ps = 0.0;
    for (int l = 0; l <= l_max; ++l) ps += lp.psi(l, t);
    return e * ps * lp.zeta(S, l1_norm(kappa));
  };
  auto chi = std::make_shared<std::vector<double>>(d->grid_size());
  for (std::size_t i = 0; i < d->grid_size(); ++i)
    (*chi)[i] = part.chi_sum(Point::from_flat(d->x_full(i), cfg.disc.n1));
  OpHandle inner = op_multiplier_joint(msum, d);
  OpHandle total;
  total.label = "sum_of_pieces";
  total.apply = [inner, chi](const GridFunction& f) {
    GridFunction g = inner.apply(f);
    for (std::size_t i = 0; i < chi->size(); ++i) g.values[i] *= (*chi)[i];
    return g;
  };
  total.adjoint_apply = [inner, chi](const GridFunction& f) {
    GridFunction g = f;
    for (std::size_t i = 0; i < chi->size(); ++i) g.values[i] *= (*chi)[i];
    return inner.adjoint_apply(g);
  };
  NormReport tn = operator_norm(total, d, opt);
  c.value("sum_norm", tn.estimate);
  c.value("cotlar_bound", A);
  c.require(tn.estimate <= A * (1.0 + cfg.tol("cotlar_bound_slack")),
            "operator norm of the sum exceeds the almost-orthogonality bound");
  return c;
}

// -------------------------------------------------------------------------
// plancherel
// -------------------------------------------------------------------------
std::size_t nearest_x_flat(const DiscPtr& d, double x1) {
  const auto& p = d->params();
  const double h = 2.0 * p.Lp / (p.Mp - 1);
  auto clampi = [&p](double v) {
    return std::min<std::size_t>(p.Mp - 1, static_cast<std::size_t>(std::max(0.0, v)));
  };
  std::size_t i0 = clampi(std::round((x1 + p.Lp) / h));
  std::size_t prime = i0;
  if (p.n1 == 2) {
    std::size_t mid = clampi(std::round(p.Lp / h));
    prime = i0 * static_cast<std::size_t>(p.Mp) + mid;
  }
  return prime * static_cast<std::size_t>(d->sec_count());
}

CheckRecord run_plancherel(const ExperimentConfig& cfg) {
  CheckRecord c;
  c.name = "plancherel";
  auto d = Discretization::create(cfg.disc);
  SymbolFn m = config_symbol(cfg);
  if (m.eta_form())
    throw std::invalid_argument("plancherel: the configured symbol must have a (tau, kappa) form");

  std::vector<std::size_t> xs;
  for (double x : cfg.plancherel_x) xs.push_back(nearest_x_flat(d, x));
  PlancherelReport rep =
      weighted_plancherel_check(m, cfg.plancherel_R, cfg.plancherel_r, cfg.plancherel_p, d, xs);

  c.table_header = {"R", "x_flat", "lhs", "rhs", "ratio"};
  for (const auto& s : rep.samples)
    c.table.push_back({s.R, static_cast<double>(s.x_flat), s.lhs, s.rhs, s.ratio});
  c.value("min_ratio", rep.min_ratio);
  c.value("max_ratio", rep.max_ratio);

  // per-x spread of the ratio over the R ladder: the quantitative content of
  // the estimate is that this stays bounded by a uniform constant
  double worst_spread = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    double lo = 1e300, hi = 0.0;
    for (std::size_t r = 0; r < cfg.plancherel_R.size(); ++r) {
      double v = rep.samples[r * xs.size() + k].ratio;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double spread = hi / std::max(lo, 1e-300);
    c.value("spread_x" + std::to_string(k), spread);
    worst_spread = std::max(worst_spread, spread);
  }
  c.require(rep.min_ratio > 0.0, "degenerate (zero) kernel ratio");
  c.require(worst_spread < cfg.tol("plancherel_spread"),
            "kernel/Sobolev ratio is not stable across the R ladder");
  return c;
}

// -------------------------------------------------------------------------
// kernel-id
// -------------------------------------------------------------------------
CheckRecord run_kernel_id(const ExperimentConfig& cfg) {
  CheckRecord c;
  c.name = "kernel-id";

  // five-term |lambda|-derivative expansion (band-free for this multiplier)
  auto m = [](double t) { return std::exp(-std::pow((t - 8.0) / 3.0, 2)); };
  auto dm = [](double t) {
    return -2.0 * (t - 8.0) / 9.0 * std::exp(-std::pow((t - 8.0) / 3.0, 2));
  };
  IdentityResult five = kernel_identity_lambda_N1(m, dm, 32, 1.0, 0.3, -0.7, 1e-4);
  c.value("five_term_residual", five.residual);
  c.require(five.residual <= cfg.tol("kernel_five_term"),
            "five-term derivative expansion residual above tolerance");

  // ladder-commutator identity for the first-coordinate difference weight
  Quadrature1D grid = uniform_trapezoid_grid(9.0, 160);
  auto mb = [](double e) { return plateau_bump(e, 3.0, 13.0, 2.0); };
  double comm1 = kernel_identity_xy(mb, 0, 1.0, 16, grid, 1, 1);
  double comm2 = kernel_identity_xy(mb, 0, 1.0, 16, grid, 1, 2);
  c.value("commutator_residual", comm1);
  c.value("commutator_residual_iterated", comm2);
  c.require(comm1 <= cfg.tol("kernel_commutator"), "commutator identity residual above tolerance");

  // heat semigroup property on the profile grid
  auto d = Discretization::create(cfg.disc);
  Rng rng(cfg.seed);
  GridFunction f = backward(SpectralField::random(d, rng));
  GridFunction two = heat_apply(0.2, heat_apply(0.3, f));
  GridFunction one = heat_apply(0.5, f);
  two.values -= one.values;
  double heat_rel = two.norm() / std::max(one.norm(), 1e-300);
  c.value("heat_semigroup_residual", heat_rel);
  c.require(heat_rel <= cfg.tol("heat_semigroup"), "heat semigroup residual above tolerance");
  return c;
}

// -------------------------------------------------------------------------
// dilation
// -------------------------------------------------------------------------
CheckRecord run_dilation(const ExperimentConfig& cfg) {
  CheckRecord c;
  c.name = "dilation";
  // dedicated grid: the conjugated operator is a pure index relabeling
  // between this discretization and its t-matched copy
  DiscretizationParams p;
  p.n1 = 1;
  p.n2 = 1;
  p.K = 16;
  p.Mp = 160;
  p.Mpp = 32;
  p.Lambda = 8;
  p.Lp = 9.0;
  auto d = Discretization::create(p);

  SymbolFn m;
  m.arity = SymbolArity::tau_kappa;
  m.eval_tk = [](const Vec&, const Vec& tau, const Vec&) {
    return plateau_bump(l1_norm(tau), 2.0, 60.0, 5.0);
  };
  double r1 = dilation_identity_check(m, 1.0, d, cfg.seed);
  double rt = dilation_identity_check(m, cfg.dilation_t, d, cfg.seed);
  c.value("residual_t1", r1);
  c.value("residual_t", rt);
  c.require(r1 <= 1e-14, "t = 1 conjugation is not the identity");
  c.require(rt <= cfg.tol("dilation_residual"), "dilation identity residual above tolerance");
  return c;
}

}  // namespace

const char* artifact_version() { return "grushin-verify 1.0.0"; }

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------
namespace {

ordered_json report_to_json(const RunReport& rep, bool with_meta) {
  ordered_json j;
  j["version"] = rep.version;
  j["subcommand"] = rep.subcommand;
  j["seed"] = rep.seed;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : rep.config_echo) cfg[k] = v;
  j["config"] = std::move(cfg);
  ordered_json checks = ordered_json::array();
  for (const auto& c : rep.checks) {
    ordered_json jc;
    jc["name"] = c.name;
    jc["verdict"] = c.verdict;
    ordered_json vals = ordered_json::object();
    for (const auto& [k, v] : c.values) vals[k] = v;
    jc["values"] = std::move(vals);
    jc["notes"] = c.notes;
    if (!c.table.empty()) {
      jc["table_header"] = c.table_header;
      jc["table"] = c.table;
    }
    checks.push_back(std::move(jc));
  }
  j["checks"] = std::move(checks);
  j["all_pass"] = rep.all_pass();
  if (with_meta) {
    ordered_json meta;
    meta["threads"] = rep.threads;
    meta["total_runtime_sec"] = rep.total_runtime_sec;
    ordered_json rt = ordered_json::object();
    for (const auto& c : rep.checks) rt[c.name] = c.runtime_sec;
    meta["check_runtime_sec"] = std::move(rt);
    j["meta"] = std::move(meta);
  }
  return j;
}

}  // namespace

std::string report_json(const RunReport& rep) { return report_to_json(rep, true).dump(2) + "\n"; }

std::string report_json_stable(const RunReport& rep) {
  return report_to_json(rep, false).dump(2) + "\n";
}

void write_report(const RunReport& rep, const std::string& out_dir, bool emit_csv) {
  if (out_dir.empty()) return;
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "report.json", std::ios::binary);
    if (!os) throw std::runtime_error("write_report: cannot write to '" + out_dir + "'");
    os << report_json(rep);
  }
  if (!emit_csv) return;
  fs::create_directories(fs::path(out_dir) / "checks");
  for (const auto& c : rep.checks) {
    {
      std::ofstream os(fs::path(out_dir) / "checks" / (c.name + ".csv"), std::ios::binary);
      os << "key,value\n";
      os << "verdict," << c.verdict << "\n";
      for (const auto& [k, v] : c.values) os << k << "," << fmt(v) << "\n";
    }
    if (!c.table.empty()) {
      std::ofstream os(fs::path(out_dir) / "checks" / (c.name + "_data.csv"), std::ios::binary);
      for (std::size_t i = 0; i < c.table_header.size(); ++i)
        os << (i ? "," : "") << c.table_header[i];
      os << "\n";
      for (const auto& row : c.table) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
        os << "\n";
      }
    }
  }
}

RunReport run_suite(const std::string& subcommand, const ExperimentConfig& cfg) {
  using Runner = CheckRecord (*)(const ExperimentConfig&);
  static const std::vector<std::pair<std::string, Runner>> runners = {
      {"verify-hermite", run_verify_hermite},
      {"verify-geometry", run_verify_geometry},
      {"apply", run_apply},
      {"cv", run_cv},
      {"cotlar", run_cotlar},
      {"plancherel", run_plancherel},
      {"kernel-id", run_kernel_id},
      {"dilation", run_dilation},
  };

  validate_config(cfg);
  RunReport rep;
  rep.version = artifact_version();
  rep.subcommand = subcommand;
  rep.seed = cfg.seed;
  rep.threads = cfg.threads > 0 ? cfg.threads : thread_cap();
  thread_cap() = rep.threads;
  rep.config_echo = config_echo(cfg);

  bool matched = false;
  auto t_all = std::chrono::steady_clock::now();
  for (const auto& [name, fn] : runners) {
    if (subcommand != "all" && subcommand != name) continue;
    matched = true;
    auto t0 = std::chrono::steady_clock::now();
    CheckRecord rec;
    try {
      rec = fn(cfg);
    } catch (const std::exception& e) {
      rec.name = name;
      rec.verdict = "FAIL";
      rec.notes.push_back(std::string("FAIL: exception: ") + e.what());
    }
    rec.runtime_sec = now_minus(t0);
    rep.checks.push_back(std::move(rec));
  }
  if (!matched) throw std::invalid_argument("run_suite: unknown subcommand '" + subcommand + "'");
  rep.total_runtime_sec = now_minus(t_all);
  return rep;
}

}  // namespace grushin
