#include "grushin/operators.hpp"

#include <cmath>
#include <map>
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

double grushin_eta(int shell, int n1, double lam_mag, GrushinMode mode) {
  double e = (2.0 * shell + n1) * lam_mag;
  return mode == GrushinMode::sqrtG ? std::sqrt(e) : e;
}

/// Phase table e^{-i lambda x''_m} for every lattice lambda.
Eigen::MatrixXcd phase_table(const DiscPtr& d) {
  const int S = d->sec_count();
  Eigen::MatrixXcd ph(d->lambdas().size(), S);
  for (std::size_t a = 0; a < d->lambdas().size(); ++a)
    for (int m = 0; m < S; ++m)
      ph(a, m) = std::exp(std::complex<double>(0.0, -d->lambdas()[a] * d->xpp_node(m)));
  return ph;
}

/// General x-dependent joint application: grid-level output
///   out(x) = (1/Lpp) sum_lambda sum_mu m(x, tau_mu, -lambda) c_{mu,lambda}
///            Phi_mu^lambda(x') e^{-i lambda x''}.
GridFunction general_joint_grid(const SymbolFn& m, const SpectralField& F) {
  const DiscPtr& d = F.disc;
  GridFunction out = GridFunction::zero(d);
  const int S = d->sec_count();
  const double inv = 1.0;  // synthesis is the plain lambda sum
  const std::size_t na = d->lambdas().size();
  const auto idx = IndexSet::get(d->n1(), d->K());
  Eigen::MatrixXcd ph = phase_table(d);

  // cache (tau, kappa) per (a, i)
  std::vector<Vec> taus(na * idx->size()), kappas(na);
  for (std::size_t a = 0; a < na; ++a) {
    double lam = d->lambdas()[a];
    kappas[a] = kappa_of(lam, d->n2());
    for (std::size_t i = 0; i < idx->size(); ++i)
      taus[a * idx->size() + i] = tau_of(idx->at(i), std::abs(lam));
  }

  parallel_for(d->prime_size(), [&](std::size_t p) {
    // basis amplitudes c_{mu,lambda} Phi_mu^lambda(x'_p)
    std::vector<std::vector<std::complex<double>>> amp(na);
    Vec xp = d->xp_node(p);
    for (std::size_t a = 0; a < na; ++a) {
      const HermiteBasis& B = d->basis(std::abs(d->lambdas()[a]));
      const Eigen::MatrixXd& V = B.values_1d();
      amp[a].resize(idx->size());
      int Mp = d->params().Mp;
      for (std::size_t i = 0; i < idx->size(); ++i) {
        const MultiIndex& mu = idx->at(i);
        double phi = d->n1() == 1 ? V(p, mu.entries[0])
                                  : V(p / Mp, mu.entries[0]) * V(p % Mp, mu.entries[1]);
        amp[a][i] = F.coeffs[a].v[i] * phi;
      }
    }
    Vec x = xp;
    if (d->n2() == 1) x.push_back(0.0);
    for (int ms = 0; ms < S; ++ms) {
      if (d->n2() == 1) x[d->n1()] = d->xpp_node(ms);
      std::complex<double> acc = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        std::complex<double> fiber = 0.0;
        for (std::size_t i = 0; i < idx->size(); ++i)
          fiber += amp[a][i] * m(x, taus[a * idx->size() + i], kappas[a]);
        acc += fiber * ph(a, ms);
      }
      out.values[static_cast<Eigen::Index>(p) * S + ms] = inv * acc;
    }
  });
  return out;
}

/// Shell-by-shell x-dependent eta-form application.
GridFunction general_grushin_grid(const SymbolFn& m, const SpectralField& F, GrushinMode mode) {
  const DiscPtr& d = F.disc;
  GridFunction out = GridFunction::zero(d);
  const int S = d->sec_count();
  const int K = d->K();
  const double inv = 1.0;  // synthesis is the plain lambda sum
  const std::size_t na = d->lambdas().size();
  Eigen::MatrixXcd ph = phase_table(d);

  // reconstruct every (lambda, shell) on the x' grid
  std::vector<Eigen::VectorXcd> shells(na * (K + 1));
  parallel_for(na, [&](std::size_t a) {
    const HermiteBasis& B = d->basis(std::abs(d->lambdas()[a]));
    const auto& idx = *F.coeffs[a].idx;
    for (int k = 0; k <= K; ++k) {
      CoeffVector sk = CoeffVector::zero(d->n1(), K);
      bool any = false;
      for (std::size_t i = 0; i < idx.size(); ++i)
        if (idx.at(i).degree() == k && F.coeffs[a].v[i] != 0.0) {
          sk.v[i] = F.coeffs[a].v[i];
          any = true;
        }
      shells[a * (K + 1) + k] =
          any ? B.reconstruct(sk) : Eigen::VectorXcd::Zero(d->prime_size());
    }
  });

  parallel_for(d->prime_size(), [&](std::size_t p) {
    Vec x = d->xp_node(p);
    if (d->n2() == 1) x.push_back(0.0);
    for (int ms = 0; ms < S; ++ms) {
      if (d->n2() == 1) x[d->n1()] = d->xpp_node(ms);
      std::complex<double> acc = 0.0;
      for (std::size_t a = 0; a < na; ++a) {
        double lam_mag = std::abs(d->lambdas()[a]);
        std::complex<double> fiber = 0.0;
        for (int k = 0; k <= K; ++k) {
          const auto& sk = shells[a * (K + 1) + k];
          if (sk.size() == 0) continue;
          std::complex<double> v = sk[p];
          if (v != 0.0) fiber += m(x, grushin_eta(k, d->n1(), lam_mag, mode)) * v;
        }
        acc += fiber * ph(a, ms);
      }
      out.values[static_cast<Eigen::Index>(p) * S + ms] = inv * acc;
    }
  });
  return out;
}

/// Pointwise grid multiplication by a spatial factor.
void multiply_spatial(const std::function<double(const Vec&)>& a, GridFunction& f) {
  parallel_for(f.values.size(), [&](std::size_t i) { f.values[i] *= a(f.disc->x_full(i)); });
}

void fill_stats(const TransformStats& ts, ApplyStats* stats) {
  if (stats) stats->out_of_band_fraction = ts.dropped_fraction;
}

}  // namespace

void scale_joint_diagonal(const SymbolFn& m, SpectralField& F) {
  const DiscPtr& d = F.disc;
  parallel_for(F.coeffs.size(), [&](std::size_t a) {
    double lam = d->lambdas()[a];
    Vec kappa = kappa_of(lam, d->n2());
    auto& c = F.coeffs[a];
    for (std::size_t i = 0; i < c.idx->size(); ++i)
      c.v[i] *= m({}, tau_of(c.idx->at(i), std::abs(lam)), kappa);
  });
}

void scale_grushin_diagonal(const SymbolFn& m, GrushinMode mode, SpectralField& F) {
  const DiscPtr& d = F.disc;
  parallel_for(F.coeffs.size(), [&](std::size_t a) {
    double lam_mag = std::abs(d->lambdas()[a]);
    auto& c = F.coeffs[a];
    for (std::size_t i = 0; i < c.idx->size(); ++i)
      c.v[i] *= m({}, grushin_eta(c.idx->at(i).degree(), d->n1(), lam_mag, mode));
  });
}

SpectralField apply_joint_band(const SymbolFn& m, const SpectralField& F) {
  if (!m.eta_form() && !m.x_dependent()) {
    SpectralField out = F;
    scale_joint_diagonal(m, out);
    return out;
  }
  if (m.eta_form()) throw std::invalid_argument("apply_joint_band: joint-arity symbol required");
  if (m.separable()) {
    SpectralField out = F;
    SymbolFn spec;
    spec.arity = SymbolArity::tau_kappa;
    spec.eval_tk = [&m](const Vec&, const Vec& tau, const Vec& kappa) {
      return m.spectral_tk(tau, kappa);
    };
    scale_joint_diagonal(spec, out);
    GridFunction g = backward(out);
    multiply_spatial(m.spatial, g);
    return forward(g);
  }
  return forward(general_joint_grid(m, F));
}

GridFunction apply_joint_pseudo(const SymbolFn& m, const GridFunction& f, ApplyStats* stats) {
  if (m.eta_form()) throw std::invalid_argument("apply_joint_pseudo: joint-arity symbol required");
  TransformStats ts;
  SpectralField F = forward(f, &ts);
  fill_stats(ts, stats);
  if (!m.x_dependent()) {
    scale_joint_diagonal(m, F);
    return backward(F);
  }
  if (m.separable()) {
    SymbolFn spec;
    spec.arity = SymbolArity::tau_kappa;
    spec.eval_tk = [&m](const Vec&, const Vec& tau, const Vec& kappa) {
      return m.spectral_tk(tau, kappa);
    };
    scale_joint_diagonal(spec, F);
    GridFunction g = backward(F);
    multiply_spatial(m.spatial, g);
    return g;
  }
  return general_joint_grid(m, F);
}

GridFunction apply_grushin_pseudo(const SymbolFn& m, const GridFunction& f, GrushinMode mode,
                                  ApplyStats* stats) {
  if (!m.eta_form())
    throw std::invalid_argument("apply_grushin_pseudo: eta-form symbol required");
  TransformStats ts;
  SpectralField F = forward(f, &ts);
  fill_stats(ts, stats);
  if (!m.x_dependent()) {
    scale_grushin_diagonal(m, mode, F);
    return backward(F);
  }
  if (m.separable()) {
    SymbolFn spec;
    spec.arity = SymbolArity::eta;
    spec.eval_eta = [&m](const Vec&, double eta) { return m.spectral_eta(eta); };
    scale_grushin_diagonal(spec, mode, F);
    GridFunction g = backward(F);
    multiply_spatial(m.spatial, g);
    return g;
  }
  return general_grushin_grid(m, F, mode);
}

GridFunction apply_hermite_pseudo(const SymbolFn& m, const GridFunction& f, ApplyStats* stats) {
  if (f.disc->n2() != 0)
    throw std::invalid_argument("apply_hermite_pseudo: requires an n2 = 0 discretization");
  return apply_grushin_pseudo(m, f, GrushinMode::sqrtG, stats);
}

// ---------------------------------------------------------------------------
// Fourier-inversion route
// ---------------------------------------------------------------------------

namespace {

/// Truncated Fourier-series delta (Dirichlet kernel) on period 2P:
/// sum_{|k| <= Kf} e^{i pi k s / P}.
double dirichlet(double s, double P, int Kf) {
  double u = 3.14159265358979323846 * s / (2.0 * P);
  double den = std::sin(u);
  if (std::abs(den) < 1e-14) return 2.0 * Kf + 1.0;
  return std::sin((2.0 * Kf + 1.0) * u) / den;
}

}  // namespace

GridFunction apply_via_fourier_inversion(const SymbolFn& m, const GridFunction& f,
                                         const FourierInversionQuad& q) {
  if (!m.eta_form())
    throw std::invalid_argument("apply_via_fourier_inversion: eta-form symbol required");
  const DiscPtr& d = f.disc;

  // reject non-compact support: m must vanish at and beyond ±R
  {
    Vec x_probe = d->x_full(d->grid_size() / 2);
    for (double s : {1.0, 1.25, 2.0})
      if (std::abs(m(x_probe, q.R * s)) > 1e-10 || std::abs(m(x_probe, -q.R * s)) > 1e-10)
        throw std::invalid_argument("apply_via_fourier_inversion: symbol not supported in [-R, R]");
  }

  const int n1 = d->n1();
  double unit_max = 0.0;
  for (double lam : d->lambdas()) unit_max = std::max(unit_max, std::abs(lam));
  double emax = (2.0 * d->K() + n1) * unit_max;
  const double P = std::max(q.R, std::sqrt(emax)) + q.margin;
  const int Kf = q.phase_terms;
  const int Nq = q.eta_samples;
  const double h = 2.0 * q.R / (Nq - 1);

  TransformStats ts;
  SpectralField F = forward(f, &ts);

  if (!m.x_dependent()) {
    // weight(e) = (1/2P) sum_q w_q m(eta_q) D(sqrt(e) - eta_q); memoized per e
    std::map<double, double> memo;
    auto weight = [&](double e) {
      auto it = memo.find(e);
      if (it != memo.end()) return it->second;
      double root = std::sqrt(e);
      double acc = 0.0;
      for (int i = 0; i < Nq; ++i) {
        double eta = -q.R + i * h;
        double w = (i == 0 || i == Nq - 1) ? h / 2.0 : h;
        acc += w * m({}, eta) * dirichlet(root - eta, P, Kf);
      }
      acc /= 2.0 * P;
      memo[e] = acc;
      return acc;
    };
    for (std::size_t a = 0; a < F.coeffs.size(); ++a) {
      double lam_mag = std::abs(d->lambdas()[a]);
      auto& c = F.coeffs[a];
      for (std::size_t i = 0; i < c.idx->size(); ++i)
        c.v[i] *= weight((2.0 * c.idx->at(i).degree() + n1) * lam_mag);
    }
    return backward(F);
  }

  // x-dependent: out = (1/2P) sum_q w_q m(x, eta_q) [D_q f](x), where D_q is
  // the Dirichlet multiplier at shift eta_q (each term one diagonal+backward)
  std::vector<Eigen::VectorXcd> terms(Nq);
  parallel_for(Nq, [&](std::size_t i) {
    double eta = -q.R + i * h;
    double w = (i == 0 || i == Nq - 1) ? h / 2.0 : h;
    SpectralField Fi = F;
    for (std::size_t a = 0; a < Fi.coeffs.size(); ++a) {
      double lam_mag = std::abs(d->lambdas()[a]);
      auto& c = Fi.coeffs[a];
      for (std::size_t j = 0; j < c.idx->size(); ++j) {
        double root = std::sqrt((2.0 * c.idx->at(j).degree() + n1) * lam_mag);
        c.v[j] *= dirichlet(root - eta, P, Kf);
      }
    }
    GridFunction g = backward(Fi);
    for (Eigen::Index n = 0; n < g.values.size(); ++n)
      g.values[n] *= w * m(d->x_full(n), eta);
    terms[i] = std::move(g.values);
  });
  GridFunction out = GridFunction::zero(d);
  for (int i = 0; i < Nq; ++i) out.values += terms[i];
  out.values /= 2.0 * P;
  return out;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

Eigen::VectorXcd compute_kernel(const SymbolFn& F, const DiscPtr& d, std::size_t x_flat) {
  if (F.eta_form() || F.x_dependent())
    throw std::invalid_argument("compute_kernel: x-independent joint symbol required");
  const int S = d->sec_count();
  const std::size_t np = d->prime_size();
  const std::size_t px = x_flat / S;
  const int mx = static_cast<int>(x_flat % S);
  const double inv = d->n2() == 0 ? 1.0 : 1.0 / d->params().Lpp;
  const auto idx = IndexSet::get(d->n1(), d->K());
  const int Mp = d->params().Mp;

  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(d->grid_size());
  std::vector<Eigen::VectorXcd> rows(d->lambdas().size());
  parallel_for(d->lambdas().size(), [&](std::size_t a) {
    double lam = d->lambdas()[a];
    double lam_mag = std::abs(lam);
    const HermiteBasis& B = d->basis(lam_mag);
    const Eigen::MatrixXd& V = B.values_1d();
    CoeffVector w = CoeffVector::zero(d->n1(), d->K());
    for (std::size_t i = 0; i < idx->size(); ++i) {
      const MultiIndex& mu = idx->at(i);
      double phi_x = d->n1() == 1 ? V(px, mu.entries[0])
                                  : V(px / Mp, mu.entries[0]) * V(px % Mp, mu.entries[1]);
      w.v[i] = F({}, tau_of(mu, lam_mag), kappa_of(lam, d->n2())) * phi_x;
    }
    rows[a] = B.reconstruct(w);  // sum_mu w_mu Phi_mu(y') over the x' grid
  });
  for (std::size_t a = 0; a < d->lambdas().size(); ++a) {
    double lam = d->lambdas()[a];
    for (std::size_t pq = 0; pq < np; ++pq)
      for (int my = 0; my < S; ++my) {
        std::complex<double> phase =
            d->n2() == 0 ? 1.0
                         : std::exp(std::complex<double>(
                               0.0, -lam * (d->xpp_node(mx) - d->xpp_node(my))));
        out[static_cast<Eigen::Index>(pq) * S + my] += inv * rows[a][pq] * phase;
      }
  }
  return out;
}

std::complex<double> kernel_row_apply(const Eigen::VectorXcd& row, const GridFunction& f) {
  const DiscPtr& d = f.disc;
  const int S = d->sec_count();
  std::complex<double> acc = 0.0;
  for (std::size_t p = 0; p < d->prime_size(); ++p) {
    std::complex<double> fiber = 0.0;
    for (int m = 0; m < S; ++m) {
      Eigen::Index i = static_cast<Eigen::Index>(p) * S + m;
      fiber += row[i] * f.values[i];
    }
    acc += d->weight_prime(p) * d->weight_sec() * fiber;
  }
  return acc;
}

Eigen::VectorXcd heat_kernel(double t, const DiscPtr& d, std::size_t x_flat) {
  if (t <= 0.0) throw std::invalid_argument("heat_kernel: t must be > 0");
  return compute_kernel(make_builtin_symbol("heat", {{"t", t}}), d, x_flat);
}

GridFunction heat_apply(double t, const GridFunction& f) {
  if (t <= 0.0) throw std::invalid_argument("heat_apply: t must be > 0");
  return apply_joint_pseudo(make_builtin_symbol("heat", {{"t", t}}), f);
}

SobolevCheck bessel_sobolev_check(double s, const GridFunction& f) {
  const DiscPtr& d = f.disc;
  SobolevCheck out;
  const int S = d->sec_count();
  for (std::size_t p = 0; p < d->prime_size(); ++p) {
    Vec xp = d->xp_node(p);
    double wvol = std::pow(std::max(1.0, l2_norm(xp)), d->n2() * 0.5);
    for (int m = 0; m < S; ++m)
      out.lhs = std::max(out.lhs,
                         wvol * std::abs(f.values[static_cast<Eigen::Index>(p) * S + m]));
  }
  SpectralField F = forward(f);
  SymbolFn bessel;
  bessel.arity = SymbolArity::eta;
  bessel.eval_eta = [s](const Vec&, double eta) { return std::pow(1.0 + eta, s / 2.0); };
  scale_grushin_diagonal(bessel, GrushinMode::G, F);
  out.rhs = F.norm();
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
  return out;
}

}  // namespace grushin
