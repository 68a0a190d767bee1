#include "grushin/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "grushin/threads.hpp"

namespace grushin {

namespace {

Vec tau_of(const MultiIndex& mu, double lam_mag) {
  Vec tau(mu.dim());
  for (int j = 0; j < mu.dim(); ++j) tau[j] = (2.0 * mu.entries[j] + 1.0) * lam_mag;
  return tau;
}

Vec kappa_of(double lam, int n2) { return n2 == 0 ? Vec{} : Vec{-lam}; }

/// Diagonal coefficient scaling by a pure spectral factor (joint form).
void scale_spectral_tk(const std::function<double(const Vec&, const Vec&)>& spec,
                       SpectralField& F) {
  const DiscPtr& d = F.disc;
  parallel_for(F.coeffs.size(), [&](std::size_t a) {
    double lam = d->lambdas()[a];
    Vec kappa = kappa_of(lam, d->n2());
    auto& c = F.coeffs[a];
    for (std::size_t i = 0; i < c.idx->size(); ++i)
      c.v[i] *= spec(tau_of(c.idx->at(i), std::abs(lam)), kappa);
  });
}

/// Diagonal coefficient scaling by a pure spectral factor (eta form).
void scale_spectral_eta(const std::function<double(double)>& spec, GrushinMode mode,
                        SpectralField& F) {
  const DiscPtr& d = F.disc;
  parallel_for(F.coeffs.size(), [&](std::size_t a) {
    double lam_mag = std::abs(d->lambdas()[a]);
    auto& c = F.coeffs[a];
    for (std::size_t i = 0; i < c.idx->size(); ++i) {
      double e = (2.0 * c.idx->at(i).degree() + d->n1()) * lam_mag;
      c.v[i] *= spec(mode == GrushinMode::sqrtG ? std::sqrt(e) : e);
    }
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Operator handles
// ---------------------------------------------------------------------------

OpHandle op_multiplier_joint(const SymbolFn& m, const DiscPtr& d) {
  if (!m.eval_tk) throw std::invalid_argument("op_multiplier_joint: needs a joint symbol");
  if (m.x_dependent()) throw std::invalid_argument("op_multiplier_joint: symbol must be x-independent");
  OpHandle T;
  T.label = "mult[" + m.label + "]";
  auto run = [m, d](const GridFunction& f) {
    SpectralField F = forward(f);
    scale_joint_diagonal(m, F);
    return backward(F);
  };
  T.apply = run;
  T.adjoint_apply = run;  // real diagonal multiplier is self-adjoint
  return T;
}

OpHandle op_multiplier_eta(const SymbolFn& m, GrushinMode mode, const DiscPtr& d) {
  if (!m.eval_eta) throw std::invalid_argument("op_multiplier_eta: needs an eta symbol");
  if (m.x_dependent()) throw std::invalid_argument("op_multiplier_eta: symbol must be x-independent");
  OpHandle T;
  T.label = "mult[" + m.label + "]";
  auto run = [m, mode, d](const GridFunction& f) {
    SpectralField F = forward(f);
    scale_grushin_diagonal(m, mode, F);
    return backward(F);
  };
  T.apply = run;
  T.adjoint_apply = run;
  return T;
}

/// Spatial factor sampled once on the grid (applies become two transforms
/// plus a cheap pointwise product; essential for the piece matrices).
std::shared_ptr<const Eigen::VectorXd> sample_spatial(const std::function<double(const Vec&)>& a,
                                                      const DiscPtr& d) {
  auto tab = std::make_shared<Eigen::VectorXd>(d->grid_size());
  parallel_for(d->grid_size(), [&](std::size_t i) { (*tab)[i] = a(d->x_full(i)); });
  return tab;
}

OpHandle op_separable_joint(const SymbolFn& m, const DiscPtr& d) {
  if (!m.separable() || !m.spectral_tk)
    throw std::invalid_argument("op_separable_joint: needs a separable joint symbol");
  OpHandle T;
  T.label = "sep[" + m.label + "]";
  auto tab = sample_spatial(m.spatial, d);
  auto spec = m.spectral_tk;
  T.apply = [tab, spec, d](const GridFunction& f) {
    SpectralField F = forward(f);
    scale_spectral_tk(spec, F);
    GridFunction g = backward(F);
    g.values.array() *= tab->array();
    return g;
  };
  T.adjoint_apply = [tab, spec, d](const GridFunction& f) {
    GridFunction g = f;
    g.values.array() *= tab->array();
    SpectralField F = forward(g);
    scale_spectral_tk(spec, F);
    return backward(F);
  };
  return T;
}

OpHandle op_separable_eta(const SymbolFn& m, GrushinMode mode, const DiscPtr& d) {
  if (!m.separable() || !m.spectral_eta)
    throw std::invalid_argument("op_separable_eta: needs a separable eta symbol");
  OpHandle T;
  T.label = "sep[" + m.label + "]";
  auto tab = sample_spatial(m.spatial, d);
  auto spec = m.spectral_eta;
  T.apply = [tab, spec, mode, d](const GridFunction& f) {
    SpectralField F = forward(f);
    scale_spectral_eta(spec, mode, F);
    GridFunction g = backward(F);
    g.values.array() *= tab->array();
    return g;
  };
  T.adjoint_apply = [tab, spec, mode, d](const GridFunction& f) {
    GridFunction g = f;
    g.values.array() *= tab->array();
    SpectralField F = forward(g);
    scale_spectral_eta(spec, mode, F);
    return backward(F);
  };
  return T;
}

OpHandle op_identity_band(const DiscPtr& d) {
  OpHandle T;
  T.label = "id_band";
  auto run = [d](const GridFunction& f) { return backward(forward(f)); };
  T.apply = run;
  T.adjoint_apply = run;
  return T;
}

OpHandle op_rank_one(const GridFunction& g, const GridFunction& h) {
  OpHandle T;
  T.label = "rank_one";
  T.apply = [g, h](const GridFunction& f) {
    std::complex<double> c = f.dot(g);
    GridFunction out = h;
    out.values *= c;
    return out;
  };
  T.adjoint_apply = [g, h](const GridFunction& f) {
    std::complex<double> c = f.dot(h);
    GridFunction out = g;
    out.values *= c;
    return out;
  };
  return T;
}

OpHandle op_compose(const OpHandle& A, const OpHandle& B) {
  OpHandle T;
  T.label = A.label + "*" + B.label;
  auto a = A, b = B;
  T.apply = [a, b](const GridFunction& f) { return a.apply(b.apply(f)); };
  T.adjoint_apply = [a, b](const GridFunction& f) { return b.adjoint_apply(a.adjoint_apply(f)); };
  return T;
}

OpHandle op_sum(const std::vector<OpHandle>& ops) {
  if (ops.empty()) throw std::invalid_argument("op_sum: empty operator list");
  OpHandle T;
  T.label = "sum[" + std::to_string(ops.size()) + "]";
  auto list = ops;
  T.apply = [list](const GridFunction& f) {
    GridFunction acc = list[0].apply(f);
    for (std::size_t i = 1; i < list.size(); ++i) acc.values += list[i].apply(f).values;
    return acc;
  };
  T.adjoint_apply = [list](const GridFunction& f) {
    GridFunction acc = list[0].adjoint_apply(f);
    for (std::size_t i = 1; i < list.size(); ++i) acc.values += list[i].adjoint_apply(f).values;
    return acc;
  };
  return T;
}

// ---------------------------------------------------------------------------
// operator_norm
// ---------------------------------------------------------------------------

NormReport operator_norm(const OpHandle& T, const DiscPtr& d, const NormOptions& opt) {
  NormReport rep;
  rep.seed = opt.seed;
  Rng root(opt.seed);
  double best = -1.0;
  double best_res = 0.0;
  bool best_conv = true;
  int total = 0;

  for (int r = 0; r < opt.restarts; ++r) {
    Rng rng = root.child(static_cast<std::uint64_t>(r) + 1);
    GridFunction v = GridFunction::zero(d);
    for (Eigen::Index i = 0; i < v.values.size(); ++i) v.values[i] = rng.complex_normal();
    double nv = v.norm();
    if (nv <= 0.0) continue;
    v.values /= nv;

    double sigma = 0.0;
    double res = 1.0;
    bool conv = false;
    for (int it = 0; it < opt.max_iter; ++it) {
      ++total;
      GridFunction w = T.adjoint_apply(T.apply(v));
      // Rayleigh quotient <T*Tv, v> = ||Tv||^2 (v is unit)
      double ray = std::abs(w.dot(v));
      double s_new = std::sqrt(ray);
      double wn = w.norm();
      if (wn <= 1e-300) {
        // the operator annihilated the iterate: certified (near-)zero
        sigma = s_new;
        res = 0.0;
        conv = true;
        break;
      }
      res = std::abs(s_new - sigma) / std::max(s_new, 1e-300);
      sigma = s_new;
      w.values /= wn;
      v = std::move(w);
      if (it > 0 && res <= opt.tol) {
        conv = true;
        break;
      }
    }
    if (sigma > best) {
      best = sigma;
      best_res = res;
      best_conv = conv;
    }
  }

  rep.estimate = std::max(best, 0.0);
  rep.iterations = total;
  rep.residual = best_res;
  rep.converged = best_conv;
  return rep;
}

// ---------------------------------------------------------------------------
// Calderon-Vaillancourt refinement experiment
// ---------------------------------------------------------------------------

CvReport cv_experiment(const SymbolFn& m, const SymbolClassParams& p,
                       const DiscretizationParams& base,
                       const std::vector<std::pair<int, int>>& ladder, std::uint64_t seed,
                       double growth_tol) {
  if (ladder.size() < 2) throw std::invalid_argument("cv_experiment: need at least 2 ladder steps");
  CvReport rep;

  // Seminorm on a probe set fixed across the ladder (covering the finest band).
  int Kmax = 0, Lmax = 0;
  for (auto& [K, L] : ladder) {
    Kmax = std::max(Kmax, K);
    Lmax = std::max(Lmax, L);
  }
  double lam_unit = 2.0 * 3.14159265358979323846 / base.Lpp;
  double e_top = (2.0 * Kmax + base.n1) * Lmax * lam_unit;
  double eta_max = m.eta_form() ? std::sqrt(e_top) : e_top;
  Vec half_widths(base.n1 + base.n2, base.Lp);
  for (int j = 0; j < base.n2; ++j) half_widths[base.n1 + j] = base.Lpp / 2.0;
  ProbeSet probes = default_probes(m.arity, base.n1, base.n2, eta_max, half_widths, 5, 48);
  double sem = seminorm(m, p, probes, base.n1, base.n2).value;

  for (auto& [K, L] : ladder) {
    DiscretizationParams dp = base;
    dp.K = K;
    dp.Lambda = L;
    DiscPtr d = Discretization::create(dp);

    OpHandle T;
    if (m.eta_form()) {
      T = m.separable() ? op_separable_eta(m, GrushinMode::sqrtG, d)
                        : op_multiplier_eta(m, GrushinMode::sqrtG, d);
    } else {
      T = m.separable() ? op_separable_joint(m, d) : op_multiplier_joint(m, d);
    }

    NormOptions no;
    no.seed = seed;
    NormReport nr = operator_norm(T, d, no);

    CvStep step;
    step.K = K;
    step.Lambda = L;
    step.op_norm = nr.estimate;
    step.seminorm = sem;
    step.ratio = sem > 0.0 ? nr.estimate / sem : nr.estimate;
    rep.steps.push_back(step);
  }

  rep.pass = true;
  std::ostringstream oss;
  for (std::size_t i = 0; i + 1 < rep.steps.size(); ++i) {
    double r0 = rep.steps[i].ratio;
    double r1 = rep.steps[i + 1].ratio;
    double growth = r0 > 0.0 ? r1 / r0 - 1.0 : (r1 > 0.0 ? 1e300 : 0.0);
    rep.max_growth = std::max(rep.max_growth, growth);
    if (growth > growth_tol) rep.pass = false;
    oss << (i ? ", " : "") << "step " << i << "->" << i + 1 << ": x" << (r0 > 0.0 ? r1 / r0 : 0.0);
  }
  rep.detail = oss.str();
  return rep;
}

// ---------------------------------------------------------------------------
// Pieces
// ---------------------------------------------------------------------------

Pieces build_pieces(const SymbolFn& m, const Partition& part, const LittlewoodPaleyFamily& lp,
                    int l_min, int l_max, int S, const DiscPtr& d) {
  if (!m.eval_tk) throw std::invalid_argument("build_pieces: needs a joint symbol");
  if (m.x_dependent()) throw std::invalid_argument("build_pieces: symbol must be x-independent");
  if (l_min < 0 || l_max < l_min) throw std::invalid_argument("build_pieces: bad l range");

  Pieces out;
  out.partition = part;
  out.disc = d;
  auto part_ptr = std::make_shared<const Partition>(part);
  auto base = m.eval_tk;
  const int n1 = d->n1();

  for (std::size_t J = 0; J < part.centers().size(); ++J) {
    auto chi = [part_ptr, J, n1](const Vec& x) {
      return part_ptr->chi(J, Point::from_flat(x, n1));
    };
    for (int l = l_min; l <= l_max; ++l) {
      auto spec = [base, lp, l, S](const Vec& tau, const Vec& kappa) {
        double w = lp.psi(l, l1_norm(tau));
        if (w == 0.0) return 0.0;
        double z = lp.zeta(S, l2_norm(kappa));
        return z == 0.0 ? 0.0 : base({}, tau, kappa) * w * z;
      };
      SymbolFn piece;
      piece.arity = SymbolArity::x_tau_kappa;
      piece.label = m.label + "[J=" + std::to_string(J) + ",l=" + std::to_string(l) + "]";
      piece.spatial = chi;
      piece.spectral_tk = spec;
      piece.eval_tk = [chi, spec](const Vec& x, const Vec& tau, const Vec& kappa) {
        double s = spec(tau, kappa);
        return s == 0.0 ? 0.0 : chi(x) * s;
      };
      out.index.push_back(PieceIndex{J, l, S});
      out.symbols.push_back(piece);
      out.ops.push_back(op_separable_joint(piece, d));
    }
  }
  return out;
}

OpHandle cut_total(const SymbolFn& m, const LittlewoodPaleyFamily& lp, int S, const DiscPtr& d) {
  if (!m.eval_tk) throw std::invalid_argument("cut_total: needs a joint symbol");
  if (m.x_dependent()) throw std::invalid_argument("cut_total: symbol must be x-independent");
  SymbolFn ms = kappa_cutoff(m, S, lp);
  return op_multiplier_joint(ms, d);
}

// ---------------------------------------------------------------------------
// Cotlar matrices
// ---------------------------------------------------------------------------

FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  FitResult fit;
  fit.points = static_cast<int>(x.size());
  if (x.size() != y.size() || x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  if (std::abs(den) < 1e-300) return fit;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

CotlarReport cotlar_matrices(const Pieces& pieces, const NormOptions& opt) {
  const std::size_t P = pieces.ops.size();
  if (P == 0) throw std::invalid_argument("cotlar_matrices: no pieces");
  CotlarReport rep;
  rep.index = pieces.index;
  rep.M1 = Eigen::MatrixXd::Zero(P, P);
  rep.M2 = Eigen::MatrixXd::Zero(P, P);
  rep.center_distance.assign(P * P, 0.0);

  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = 0; q < P; ++q)
      rep.center_distance[p * P + q] = distance(pieces.partition.centers()[pieces.index[p].J],
                                                pieces.partition.centers()[pieces.index[q].J]);

  // work items: upper triangle including the diagonal (both matrices are
  // symmetric up to power-iteration noise; the mirror is copied)
  std::vector<std::pair<std::size_t, std::size_t>> items;
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = p; q < P; ++q) items.emplace_back(p, q);
  std::vector<double> m1v(items.size()), m2v(items.size());

  const DiscPtr& d = pieces.disc;
  parallel_for(items.size(), [&](std::size_t s) {
    auto [p, q] = items[s];
    const OpHandle& Tp = pieces.ops[p];
    const OpHandle& Tq = pieces.ops[q];
    OpHandle A;  // T_p^* T_q
    A.apply = [&Tp, &Tq](const GridFunction& f) { return Tp.adjoint_apply(Tq.apply(f)); };
    A.adjoint_apply = [&Tp, &Tq](const GridFunction& f) { return Tq.adjoint_apply(Tp.apply(f)); };
    OpHandle B;  // T_p T_q^*
    B.apply = [&Tp, &Tq](const GridFunction& f) { return Tp.apply(Tq.adjoint_apply(f)); };
    B.adjoint_apply = [&Tp, &Tq](const GridFunction& f) { return Tq.apply(Tp.adjoint_apply(f)); };
    NormOptions no = opt;
    no.seed = opt.seed + 1000003ULL * s;
    m1v[s] = operator_norm(A, d, no).estimate;
    no.seed = opt.seed + 1000003ULL * s + 500009ULL;
    m2v[s] = operator_norm(B, d, no).estimate;
  });

  for (std::size_t s = 0; s < items.size(); ++s) {
    auto [p, q] = items[s];
    rep.M1(p, q) = rep.M1(q, p) = m1v[s];
    rep.M2(p, q) = rep.M2(q, p) = m2v[s];
  }

  // decay fit: log2(max M1 at dyadic offset) vs |l - l'|
  std::vector<double> cj;  // max M1 entry at offset j
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = 0; q < P; ++q) {
      int off = std::abs(rep.index[p].l - rep.index[q].l);
      if (static_cast<std::size_t>(off) >= cj.size()) cj.resize(off + 1, 0.0);
      cj[off] = std::max(cj[off], rep.M1(p, q));
    }
  std::vector<double> fx, fy;
  for (std::size_t j = 0; j < cj.size(); ++j)
    if (cj[j] > 1e-300) {
      fx.push_back(static_cast<double>(j));
      fy.push_back(std::log2(cj[j]));
    }
  rep.m1_vs_l = fit_line(fx, fy);

  fx.clear();
  fy.clear();
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = 0; q < P; ++q) {
      if (p == q) continue;
      if (std::abs(rep.index[p].l - rep.index[q].l) > 2) continue;
      double v = rep.M2(p, q);
      double dist = rep.center_distance[p * P + q];
      if (v > 1e-13) {
        fx.push_back(std::log(1.0 + dist));
        fy.push_back(std::log(v));
      }
    }
  rep.m2_vs_d = fit_line(fx, fy);
  return rep;
}

// ---------------------------------------------------------------------------
// Weighted Plancherel ratios
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd diff_rows(const Eigen::MatrixXd& v, double h) {
  Eigen::MatrixXd out(v.rows() - 2, v.cols());
  for (Eigen::Index i = 1; i + 1 < v.rows(); ++i)
    out.row(i - 1) = (v.row(i + 1) - v.row(i - 1)) / (2.0 * h);
  return out;
}

Eigen::MatrixXd diff_cols(const Eigen::MatrixXd& v, double h) {
  Eigen::MatrixXd out(v.rows(), v.cols() - 2);
  for (Eigen::Index j = 1; j + 1 < v.cols(); ++j)
    out.col(j - 1) = (v.col(j + 1) - v.col(j - 1)) / (2.0 * h);
  return out;
}

/// sup over |a| + |b| <= r of |d_tau^a d_kappa^b m| on a fixed probe table
/// (tau in [0, 6], kappa in [-6, 6]; finite differences).
double wr_inf_norm(const SymbolFn& m, int r) {
  const int NT = 361, NK = 721;
  const double ht = 6.0 / (NT - 1), hk = 12.0 / (NK - 1);
  Eigen::MatrixXd V(NT, NK);
  for (int i = 0; i < NT; ++i)
    for (int j = 0; j < NK; ++j) V(i, j) = m.eval_tk({}, {i * ht}, {-6.0 + j * hk});
  double best = 0.0;
  Eigen::MatrixXd Da = V;
  for (int a = 0; a <= r; ++a) {
    Eigen::MatrixXd Db = Da;
    for (int b = 0; b <= r - a; ++b) {
      best = std::max(best, Db.cwiseAbs().maxCoeff());
      if (b < r - a) Db = diff_cols(Db, hk);
    }
    if (a < r) Da = diff_rows(Da, ht);
  }
  return best;
}

}  // namespace

PlancherelReport weighted_plancherel_check(const SymbolFn& base_m, const std::vector<double>& Rs,
                                           int r, int p_norm, const DiscPtr& d,
                                           const std::vector<std::size_t>& x_nodes) {
  if (!base_m.eval_tk)
    throw std::invalid_argument("weighted_plancherel_check: needs a joint symbol");
  if (base_m.x_dependent())
    throw std::invalid_argument("weighted_plancherel_check: symbol must be x-independent");
  if (d->n1() != 1 || d->n2() != 1)
    throw std::invalid_argument("weighted_plancherel_check: only n1 = n2 = 1 supported");
  if (p_norm != 0 && p_norm < 1)
    throw std::invalid_argument("weighted_plancherel_check: p must be >= 1 or 0 (= sup norm)");

  PlancherelReport rep;
  const double wnorm = wr_inf_norm(base_m, r);
  const double Lpp = d->params().Lpp;
  const int S = d->sec_count();

  for (double R : Rs) {
    if (!(R > 0.0)) throw std::invalid_argument("weighted_plancherel_check: R must be > 0");
    const double R2 = R * R;
    SymbolFn FR;
    FR.arity = SymbolArity::tau_kappa;
    FR.label = base_m.label + "@R=" + std::to_string(R);
    auto base = base_m.eval_tk;
    FR.eval_tk = [base, R2](const Vec&, const Vec& tau, const Vec& kappa) {
      Vec ts = tau, ks = kappa;
      for (double& t : ts) t /= R2;
      for (double& k : ks) k /= R2;
      return base({}, ts, ks);
    };

    for (std::size_t xf : x_nodes) {
      Eigen::VectorXcd row = compute_kernel(FR, d, xf);
      Point X = Point::from_flat(d->x_full(xf), 1);
      double volx = ball_volume_model(X, 1.0 / R, 1);

      double acc = 0.0, sup = 0.0;
      for (std::size_t p = 0; p < d->prime_size(); ++p) {
        double wp = d->weight_prime(p) * d->weight_sec();
        for (int ms = 0; ms < S; ++ms) {
          Eigen::Index i = static_cast<Eigen::Index>(p) * S + ms;
          Point Y = Point::from_flat(d->x_full(i), 1);
          // periodic x'' representative closest to X
          double dpp = Y.xpp[0] - X.xpp[0];
          dpp -= Lpp * std::round(dpp / Lpp);
          Y.xpp[0] = X.xpp[0] + dpp;
          double dist = distance(X, Y);
          double voly = ball_volume_model(Y, 1.0 / R, 1);
          double term = std::pow(1.0 + R * dist, r) * std::abs(row[i]);
          if (p_norm == 0) {
            sup = std::max(sup, std::sqrt(voly) * term);
          } else {
            acc += wp * std::pow(voly, 0.5 * p_norm - 1.0) * std::pow(term, p_norm);
          }
        }
      }
      PlancherelSample s;
      s.R = R;
      s.x_flat = xf;
      s.lhs = p_norm == 0 ? sup : std::pow(acc, 1.0 / p_norm);
      s.rhs = wnorm / std::sqrt(volx);
      s.ratio = s.rhs > 0.0 ? s.lhs / s.rhs : 0.0;
      rep.samples.push_back(s);
    }
  }
  rep.min_ratio = 1e300;
  rep.max_ratio = 0.0;
  for (auto& s : rep.samples) {
    rep.min_ratio = std::min(rep.min_ratio, s.ratio);
    rep.max_ratio = std::max(rep.max_ratio, s.ratio);
  }
  if (rep.samples.empty()) rep.min_ratio = 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Kernel identities
// ---------------------------------------------------------------------------

IdentityResult kernel_identity_lambda_N1(const std::function<double(double)>& m,
                                         const std::function<double(double)>& dm, int K,
                                         double lam, double xp, double yp, double h) {
  if (lam <= 0.0 || h <= 0.0) throw std::invalid_argument("kernel_identity_lambda_N1: bad lam/h");
  Vec X{xp}, Y{yp};
  auto kernel = [&](double L) {
    double s = 0.0;
    for (int k = 0; k <= K; ++k) {
      MultiIndex mu({k});
      s += m((2.0 * k + 1.0) * L) * scaled_hermite(mu, L, X) * scaled_hermite(mu, L, Y);
    }
    return s;
  };

  IdentityResult res;
  res.lhs = (kernel(lam + h) - kernel(lam - h)) / (2.0 * h);

  double rhs = 0.0;
  for (int k = 0; k <= K; ++k) {
    MultiIndex mu({k});
    double phx = scaled_hermite(mu, lam, X);
    double phy = scaled_hermite(mu, lam, Y);
    double mv = m((2.0 * k + 1.0) * lam);
    rhs += (2.0 * k + 1.0) * dm((2.0 * k + 1.0) * lam) * phx * phy;
    rhs += mv * (lambda_derivative_rhs(mu, lam, X) * phy + phx * lambda_derivative_rhs(mu, lam, Y));
  }
  res.rhs = rhs;
  res.residual = std::abs(res.lhs - res.rhs) / (std::abs(res.lhs) + 1e-300);
  return res;
}

double kernel_identity_xy(const std::function<double(double)>& m, int j, double lam, int K,
                          const Quadrature1D& grid, int n1, int power) {
  if (n1 != 1) throw std::invalid_argument("kernel_identity_xy: only n1 = 1 supported");
  if (j != 0) throw std::invalid_argument("kernel_identity_xy: coordinate out of range");
  if (power != 1 && power != 2) throw std::invalid_argument("kernel_identity_xy: power must be 1 or 2");
  if (lam <= 0.0) throw std::invalid_argument("kernel_identity_xy: lambda must be > 0");

  const int P = K + 1;
  Eigen::MatrixXd Mm = Eigen::MatrixXd::Zero(P, P);
  for (int k = 0; k <= K; ++k) Mm(k, k) = m((2.0 * k + 1.0) * lam);

  // annihilation matrix: A phi_k = sqrt(2 k lam) phi_{k-1}
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(P, P);
  for (int k = 1; k <= K; ++k) A(k - 1, k) = std::sqrt(2.0 * k * lam);
  // multiplication by x'_j = (A + A^*) / (2 lam) in this ladder normalization
  // (A carries a factor sqrt(lam) relative to the unit-scale ladder)
  Eigen::MatrixXd Xop = (A + A.transpose()) / (2.0 * lam);

  Eigen::MatrixXd C = Xop * Mm - Mm * Xop;
  if (power == 2) C = Xop * C - C * Xop;

  HermiteBasis B(1, K, lam, grid);
  const Eigen::MatrixXd& V = B.values_1d();  // M x P, columns by degree
  Eigen::MatrixXd KM = V * Mm * V.transpose();
  Eigen::MatrixXd KC = V * C * V.transpose();

  double max_lhs = 0.0, max_err = 0.0;
  const auto& nodes = grid.nodes;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      double fac = nodes[a] - nodes[b];
      if (power == 2) fac *= fac;
      double lhs = fac * KM(a, b);
      max_lhs = std::max(max_lhs, std::abs(lhs));
      max_err = std::max(max_err, std::abs(lhs - KC(a, b)));
    }
  return max_err / (max_lhs + 1e-300);
}

// ---------------------------------------------------------------------------
// Dilation identity
// ---------------------------------------------------------------------------

double dilation_identity_check(const SymbolFn& m, double t, const DiscPtr& base,
                               std::uint64_t seed) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument("dilation_identity_check: t must be positive and finite");
  if (base->n2() != 1)
    throw std::invalid_argument("dilation_identity_check: needs an x'' factor (n2 = 1)");
  if (!m.eval_tk) throw std::invalid_argument("dilation_identity_check: needs a joint symbol");

  const double t2 = t * t;
  DiscretizationParams pb = base->params();
  DiscretizationParams pd = pb;
  pd.Lp = pb.Lp * t;
  pd.Lpp = pb.Lpp * t2;
  DiscPtr DB = Discretization::create(pd);  // delta_t image grid: nodes are t-scaled

  Rng rng(seed);
  SpectralField FB = SpectralField::random(DB, rng);
  GridFunction f = backward(FB);  // band-limited input on the dilated grid

  // Route 1: delta_{t^{-1}} T delta_t. Both dilations are exact index
  // relabelings between the matched grids (node i of DB is delta_t of node i
  // of the base grid), so they copy the value array across discretizations.
  GridFunction g;
  g.disc = base;
  g.values = f.values;
  GridFunction h = apply_joint_pseudo(m, g);
  GridFunction out1;
  out1.disc = DB;
  out1.values = h.values;

  // Route 2: the dilated symbol m_t(x, tau, kappa) = m(x'/t, x''/t^2, t^2 tau, t^2 kappa)
  const int n1 = base->n1();
  auto scale_x = [t, t2, n1](Vec x) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] /= (static_cast<int>(k) < n1 ? t : t2);
    return x;
  };
  auto scale_v = [t2](Vec v) {
    for (double& e : v) e *= t2;
    return v;
  };
  SymbolFn mt;
  mt.arity = m.arity;
  mt.smoothness_order = m.smoothness_order;
  mt.label = m.label + "@t=" + std::to_string(t);
  auto base_tk = m.eval_tk;
  mt.eval_tk = [base_tk, scale_x, scale_v](const Vec& x, const Vec& tau, const Vec& kappa) {
    return base_tk(scale_x(x), scale_v(tau), scale_v(kappa));
  };
  if (m.separable()) {
    auto sx = m.spatial;
    mt.spatial = [sx, scale_x](const Vec& x) { return sx(scale_x(x)); };
    auto sv = m.spectral_tk;
    mt.spectral_tk = [sv, scale_v](const Vec& tau, const Vec& kappa) {
      return sv(scale_v(tau), scale_v(kappa));
    };
  }
  GridFunction out2 = apply_joint_pseudo(mt, f);

  GridFunction diff;
  diff.disc = DB;
  diff.values = out1.values - out2.values;
  double fn = f.norm();
  return fn > 0.0 ? diff.norm() / fn : 0.0;
}

}  // namespace grushin
