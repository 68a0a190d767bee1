#include "grushin/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace grushin {

namespace {

// ---------------------------------------------------------------------------
// Nested finite differences over the unified evaluation point
// ---------------------------------------------------------------------------

struct DPoint {
  Vec x;      // n1 + n2 coordinates (empty for x-independent symbols)
  double eta = 0.0;
  Vec tau;    // n1
  Vec kappa;  // n2
};

// Derivative directions: spatial Grushin fields and spectral coordinates.
struct Dir {
  enum Kind { XPrime, Mixed, Eta, Tau, Kappa } kind;
  int j = 0;  // x' / tau coordinate
  int k = 0;  // x'' / kappa coordinate
  bool spatial() const { return kind == XPrime || kind == Mixed; }
};

double eval_at(const SymbolFn& m, const DPoint& p) {
  return m.eta_form() ? m.eval_eta(p.x, p.eta) : m.eval_tk(p.x, p.tau, p.kappa);
}

// Step size for one finite-difference level. The base step follows the
// h = 1e-4 (1 + |probe|) rule; for deeply nested stencils the step is widened
// toward the roundoff-optimal eps^{1/(depth+2)} scale so that high-order
// derivatives stay meaningful in double precision.
double fd_step(double coord, int depth) {
  double h0 = 1e-4;
  if (depth >= 2) h0 = std::max(h0, std::pow(3e-16, 1.0 / (depth + 2)));
  return h0 * (1.0 + std::abs(coord));
}

double deriv_word(const SymbolFn& m, int n1, const std::vector<Dir>& word, std::size_t pos,
                  DPoint p, int depth) {
  if (pos == word.size()) return eval_at(m, p);
  const Dir d = word[pos];
  double* coord = nullptr;
  switch (d.kind) {
    case Dir::XPrime: coord = &p.x[d.j]; break;
    case Dir::Mixed: coord = &p.x[n1 + d.k]; break;
    case Dir::Eta: coord = &p.eta; break;
    case Dir::Tau: coord = &p.tau[d.j]; break;
    case Dir::Kappa: coord = &p.kappa[d.k]; break;
  }
  const double c0 = *coord;
  auto central = [&](double h) {
    *coord = c0 + h;
    double fp = deriv_word(m, n1, word, pos + 1, p, depth);
    *coord = c0 - h;
    double fm = deriv_word(m, n1, word, pos + 1, p, depth);
    *coord = c0;
    return (fp - fm) / (2.0 * h);
  };
  const double h = fd_step(c0, depth);
  // one Richardson extrapolation of the central difference
  double val = (4.0 * central(h / 2.0) - central(h)) / 3.0;
  if (d.kind == Dir::Mixed) val *= p.x[d.j];  // X_{j,k} = x'_j d/dx''_k
  return val;
}

// All ordered derivative words of length <= N over the alphabet admitted by
// the symbol arity (the fields do not commute with each other, so order is
// part of the word).
std::vector<std::vector<Dir>> make_words(const SymbolFn& m, int n1, int n2, int N) {
  std::vector<Dir> alphabet;
  if (m.x_dependent()) {
    for (int j = 0; j < n1; ++j) alphabet.push_back({Dir::XPrime, j, 0});
    for (int j = 0; j < n1; ++j)
      for (int k = 0; k < n2; ++k) alphabet.push_back({Dir::Mixed, j, k});
  }
  if (m.eta_form()) {
    alphabet.push_back({Dir::Eta, 0, 0});
  } else {
    for (int j = 0; j < n1; ++j) alphabet.push_back({Dir::Tau, j, 0});
    for (int k = 0; k < n2; ++k) alphabet.push_back({Dir::Kappa, 0, k});
  }
  std::vector<std::vector<Dir>> words;
  words.push_back({});
  std::vector<std::vector<Dir>> frontier = {{}};
  for (int len = 1; len <= N; ++len) {
    std::vector<std::vector<Dir>> next;
    for (const auto& w : frontier)
      for (const auto& a : alphabet) {
        auto w2 = w;
        w2.push_back(a);
        next.push_back(w2);
      }
    words.insert(words.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return words;
}

std::string describe_word(const std::vector<Dir>& w) {
  std::ostringstream os;
  if (w.empty()) return "id";
  for (const auto& d : w) {
    switch (d.kind) {
      case Dir::XPrime: os << "X" << d.j << " "; break;
      case Dir::Mixed: os << "X" << d.j << "," << d.k << " "; break;
      case Dir::Eta: os << "d_eta "; break;
      case Dir::Tau: os << "d_tau" << d.j << " "; break;
      case Dir::Kappa: os << "d_kappa" << d.k << " "; break;
    }
  }
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

ProbeSet default_probes(SymbolArity arity, int n1, int n2, double eta_max, const Vec& half_widths,
                        int per_dim, int eta_count) {
  ProbeSet ps;
  const bool xdep = (arity == SymbolArity::x_eta || arity == SymbolArity::x_tau_kappa);
  if (!xdep) {
    ps.x.push_back(Vec{});
  } else {
    // uniform lattice over the box, row-major over the n1+n2 coordinates
    const int dims = n1 + n2;
    std::vector<int> counter(dims, 0);
    for (;;) {
      Vec x(dims);
      for (int d = 0; d < dims; ++d) {
        double hw = half_widths[d];
        x[d] = per_dim == 1 ? 0.0 : -hw + 2.0 * hw * counter[d] / (per_dim - 1);
      }
      ps.x.push_back(x);
      int d = 0;
      while (d < dims && ++counter[d] == per_dim) counter[d++] = 0;
      if (d == dims) break;
    }
  }
  // log-spaced spectral probes covering the dyadic shells
  std::vector<double> grid;
  grid.push_back(0.0);
  for (int i = 0; i < eta_count - 1; ++i) {
    double t = 0.25 * std::pow(eta_max / 0.25, static_cast<double>(i) / (eta_count - 2));
    grid.push_back(t);
  }
  if (arity == SymbolArity::eta || arity == SymbolArity::x_eta) {
    ps.eta = grid;
  } else {
    for (double t : grid) {
      if (t == 0.0) continue;  // joint symbols live on tau in (R+)^{n1}, kappa != 0
      for (double s : {0.5, 4.0}) {
        for (double sign : {1.0, -1.0}) {
          Vec tau(n1, t);
          Vec kappa(n2, 0.0);
          kappa[0] = sign * s;
          ps.tau_kappa.emplace_back(tau, kappa);
        }
      }
    }
  }
  return ps;
}

SeminormReport seminorm(const SymbolFn& m, const SymbolClassParams& p, const ProbeSet& probes,
                        int n1, int n2) {
  SeminormReport rep;
  auto words = make_words(m, n1, n2, p.N);
  for (const auto& w : words) {
    int gamma = 0, l = 0;
    for (const auto& d : w) (d.spatial() ? gamma : l)++;
    bool pure_eta = m.eta_form() && gamma == 0;
    for (const auto& x : probes.x) {
      auto consider = [&](const DPoint& pt, double base, const std::string& where) {
        double val;
        if (pure_eta && m.eta_derivative) {
          val = m.eta_derivative(pt.x, pt.eta, l);
        } else {
          val = deriv_word(m, n1, w, 0, pt, static_cast<int>(w.size()));
        }
        if (!std::isfinite(val)) {
          rep.skipped++;
          return;
        }
        double weighted =
            std::pow(1.0 + base, -p.sigma / 2.0 + (1.0 + p.rho) * l / 2.0 - p.delta * gamma / 2.0) *
            std::abs(val);
        if (weighted > rep.value) {
          rep.value = weighted;
          rep.argmax = describe_word(w) + "@ " + where;
        }
      };
      if (m.eta_form()) {
        for (double eta : probes.eta) {
          DPoint pt{x, eta, {}, {}};
          std::ostringstream os;
          os << "eta=" << eta;
          consider(pt, eta, os.str());
        }
      } else {
        for (const auto& [tau, kappa] : probes.tau_kappa) {
          DPoint pt{x, 0.0, tau, kappa};
          std::ostringstream os;
          os << "|tau|=" << l2_norm(tau) << ",|kappa|=" << l2_norm(kappa);
          consider(pt, l2_norm(tau) + l2_norm(kappa), os.str());
        }
      }
    }
  }
  return rep;
}

SymbolFn dyadic_piece(const SymbolFn& m, int l, const LittlewoodPaleyFamily& lp,
                      DyadicVariant variant) {
  if (l < 0) throw std::invalid_argument("dyadic_piece: l must be >= 0");
  SymbolFn out = m;
  out.label = m.label + "*psi_" + std::to_string(l);
  if (variant == DyadicVariant::eta) {
    if (!m.eval_eta) throw std::invalid_argument("dyadic_piece: eta variant needs an eta symbol");
    auto base = m.eval_eta;
    out.eval_eta = [base, l, lp](const Vec& x, double eta) {
      double w = lp.psi(l, eta);
      return w == 0.0 ? 0.0 : base(x, eta) * w;
    };
    if (m.separable()) {
      auto sp = m.spectral_eta;
      out.spectral_eta = [sp, l, lp](double eta) {
        double w = lp.psi(l, eta);
        return w == 0.0 ? 0.0 : sp(eta) * w;
      };
    }
    out.eta_derivative = nullptr;  // product breaks the declared derivatives
  } else {
    if (!m.eval_tk) throw std::invalid_argument("dyadic_piece: variant needs a joint symbol");
    const bool joint = (variant == DyadicVariant::tau_kappa_l1);
    auto base = m.eval_tk;
    auto cut = [l, lp, joint](const Vec& tau, const Vec& kappa) {
      double arg = l1_norm(tau) + (joint ? l1_norm(kappa) : 0.0);
      return lp.psi(l, arg);
    };
    out.eval_tk = [base, cut](const Vec& x, const Vec& tau, const Vec& kappa) {
      double w = cut(tau, kappa);
      return w == 0.0 ? 0.0 : base(x, tau, kappa) * w;
    };
    if (m.separable()) {
      auto sp = m.spectral_tk;
      out.spectral_tk = [sp, cut](const Vec& tau, const Vec& kappa) {
        double w = cut(tau, kappa);
        return w == 0.0 ? 0.0 : sp(tau, kappa) * w;
      };
    }
  }
  return out;
}

SymbolFn kappa_cutoff(const SymbolFn& m, int S, const LittlewoodPaleyFamily& lp,
                      std::function<double(const Vec& x)> chi_x) {
  if (!m.eval_tk) throw std::invalid_argument("kappa_cutoff: needs a joint (tau,kappa) symbol");
  SymbolFn out = m;
  out.label = m.label + "*zeta^" + std::to_string(S) + (chi_x ? "*chi_J" : "");
  auto base = m.eval_tk;
  out.eval_tk = [base, S, lp, chi_x](const Vec& x, const Vec& tau, const Vec& kappa) {
    double z = lp.zeta(S, l2_norm(kappa));
    if (z == 0.0) return 0.0;
    double c = chi_x ? chi_x(x) : 1.0;
    return c == 0.0 ? 0.0 : base(x, tau, kappa) * z * c;
  };
  if (chi_x) out.arity = SymbolArity::x_tau_kappa;
  if (m.separable()) {
    auto sp = m.spectral_tk;
    out.spectral_tk = [sp, S, lp](const Vec& tau, const Vec& kappa) {
      double z = lp.zeta(S, l2_norm(kappa));
      return z == 0.0 ? 0.0 : sp(tau, kappa) * z;
    };
    auto spx = m.spatial;
    if (chi_x) {
      out.spatial = [spx, chi_x](const Vec& x) { return spx(x) * chi_x(x); };
    }
  } else if (chi_x) {
    out.spatial = nullptr;  // keep the non-separable contract honest
  }
  return out;
}

CancellationReport check_cancellation(const SymbolFn& m, int order, const std::vector<double>& path,
                                      int n1, int n2, double tol) {
  if (!m.eval_tk) throw std::invalid_argument("check_cancellation: needs a joint symbol");
  CancellationReport rep;
  rep.order = order;
  rep.pass = true;

  // representative x / tau probes (maxima taken across them)
  std::vector<Vec> xs;
  if (m.x_dependent()) {
    xs.push_back(Vec(n1 + n2, 0.0));
    xs.push_back(Vec(n1 + n2, 0.3));
  } else {
    xs.push_back(Vec{});
  }
  std::vector<Vec> taus = {Vec(n1, 1.0), Vec(n1, 3.0)};

  std::ostringstream detail;
  for (int b = 0; b <= order; ++b) {
    std::vector<Dir> word(b, Dir{Dir::Kappa, 0, 0});
    std::vector<double> mags;
    for (double eps : path) {
      double worst = 0.0;
      for (const auto& x : xs)
        for (const auto& tau : taus)
          for (double sign : {1.0, -1.0}) {
            Vec kappa(n2, 0.0);
            kappa[0] = sign * eps;
            DPoint pt{x, 0.0, tau, kappa};
            double v = deriv_word(m, n1, word, 0, pt, b);
            worst = std::max(worst, std::abs(v));
          }
      mags.push_back(worst);
    }
    // least-squares slope of log|mag| vs log|kappa| (ignoring exact zeros)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (mags[i] <= 0.0) continue;
      double lx = std::log(path[i]), ly = std::log(mags[i]);
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
      cnt++;
    }
    double slope = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
    rep.slopes.push_back(slope);
    rep.final_magnitudes.push_back(mags.back());
    bool monotone = true;
    for (std::size_t i = 1; i < mags.size(); ++i)
      if (mags[i] > mags[i - 1] * 1.25 + 1e-10 * (1.0 + mags.front())) monotone = false;
    // "decays to zero": either already below tolerance at the end of the path
    // or decreasing with a definite power-law rate in |kappa|
    bool ok = monotone &&
              (mags.back() <= tol * std::max(1.0, mags.front()) || slope >= 0.5);
    if (!ok) rep.pass = false;
    detail << "|beta|=" << b << ": final=" << mags.back() << " slope=" << slope
           << (ok ? " ok" : " FAIL") << "; ";
  }
  rep.detail = detail.str();
  return rep;
}

// ---------------------------------------------------------------------------
// Built-in symbols
// ---------------------------------------------------------------------------

namespace {
double get(const std::map<std::string, double>& p, const std::string& k, double dflt) {
  auto it = p.find(k);
  return it == p.end() ? dflt : it->second;
}
}  // namespace

SymbolFn make_builtin_symbol(const std::string& name, const std::map<std::string, double>& params) {
  SymbolFn m;
  m.label = name;
  if (name == "constant") {
    double v = get(params, "value", 1.0);
    m.arity = SymbolArity::eta;
    m.eval_eta = [v](const Vec&, double) { return v; };
    m.eval_tk = [v](const Vec&, const Vec&, const Vec&) { return v; };
    m.spatial = [](const Vec&) { return 1.0; };
    m.spectral_eta = [v](double) { return v; };
    m.spectral_tk = [v](const Vec&, const Vec&) { return v; };
    m.eta_derivative = [v](const Vec&, double, int l) { return l == 0 ? v : 0.0; };
    return m;
  }
  if (name == "power-decay" || name == "power-growth") {
    double a = get(params, "exponent", 1.0);
    if (name == "power-decay") a = -a;
    m.arity = SymbolArity::eta;
    auto f = [a](double eta) { return std::pow(1.0 + eta, a); };
    m.eval_eta = [f](const Vec&, double eta) { return f(eta); };
    m.spatial = [](const Vec&) { return 1.0; };
    m.spectral_eta = f;
    m.eta_derivative = [a](const Vec&, double eta, int l) {
      double c = 1.0;
      for (int i = 0; i < l; ++i) c *= (a - i);
      return c * std::pow(1.0 + eta, a - l);
    };
    return m;
  }
  if (name == "sinusoidal-x") {
    double a = get(params, "exponent", 0.5);
    m.arity = SymbolArity::x_eta;
    auto sp = [](const Vec& x) { return std::sin(x[0]); };
    auto f = [a](double eta) { return std::pow(1.0 + eta, -a); };
    m.eval_eta = [sp, f](const Vec& x, double eta) { return sp(x) * f(eta); };
    m.spatial = sp;
    m.spectral_eta = f;
    m.eta_derivative = [sp, a](const Vec& x, double eta, int l) {
      double c = 1.0;
      for (int i = 0; i < l; ++i) c *= (-a - i);
      return sp(x) * c * std::pow(1.0 + eta, -a - l);
    };
    return m;
  }
  if (name == "bump-eta") {
    double lo = get(params, "lo", -2.0);
    double hi = get(params, "hi", 2.0);
    double w = get(params, "width", 0.5 * (hi - lo) * 0.4);
    m.arity = SymbolArity::eta;
    auto f = [lo, hi, w](double eta) { return plateau_bump(eta, lo, hi, w); };
    m.eval_eta = [f](const Vec&, double eta) { return f(eta); };
    m.spatial = [](const Vec&) { return 1.0; };
    m.spectral_eta = f;
    return m;
  }
  if (name == "sin-kappa-power") {
    int p = static_cast<int>(get(params, "power", 4.0));
    double lo = get(params, "tau_lo", 0.0);
    double hi = get(params, "tau_hi", 64.0);
    double w = get(params, "width", 0.25 * (hi - lo));
    m.arity = SymbolArity::tau_kappa;
    auto f = [p, lo, hi, w](const Vec& tau, const Vec& kappa) {
      double s = std::pow(std::sin(kappa[0]), p);
      return s * plateau_bump(l1_norm(tau), lo, hi, w);
    };
    m.eval_tk = [f](const Vec&, const Vec& tau, const Vec& kappa) { return f(tau, kappa); };
    m.spatial = [](const Vec&) { return 1.0; };
    m.spectral_tk = f;
    return m;
  }
  if (name == "cancellation-boost") {
    double tlo = get(params, "tau_lo", 0.18);
    double thi = get(params, "tau_hi", 0.82);
    double tw = get(params, "tau_width", 0.06);
    int pow_k = static_cast<int>(get(params, "power", 6.0));
    double k0 = get(params, "k0", 0.25);
    double k1 = get(params, "k1", 0.03);
    double kf = get(params, "kf", 0.0156);
    double q1 = get(params, "q1", 7.6);
    double q2 = get(params, "q2", 3.4);
    double w = get(params, "smooth", 0.25);
    double scale = get(params, "scale", 1.0);
    m.arity = SymbolArity::tau_kappa;
    // Compactly supported product symbol vanishing like kappa^power at
    // kappa = 0, with a smoothed piecewise-log-linear amplitude profile that
    // counterweights the vanishing over the octaves the experiments occupy.
    auto soft = [](double z, double w) {
      double t = z / w;
      if (t > 30.0) return z;
      if (t < -30.0) return 0.0;
      return w * std::log1p(std::exp(t));
    };
    auto f = [=](const Vec& tau, const Vec& kappa) {
      double t = l1_norm(tau) * scale;
      double B = plateau_bump(t, tlo, thi, tw);
      if (B == 0.0) return 0.0;
      double k = kappa[0] * scale;
      double a = std::max(std::abs(k), 1e-14);
      double u = std::log(a);
      double E = q1 * soft(std::log(k0) - u, w) -
                 (q1 - q2) * soft(std::log(k1) - u, w) - q2 * soft(std::log(kf) - u, w);
      return B * std::pow(k, pow_k) * std::exp(E);
    };
    m.eval_tk = [f](const Vec&, const Vec& tau, const Vec& kappa) { return f(tau, kappa); };
    m.spatial = [](const Vec&) { return 1.0; };
    m.spectral_tk = f;
    return m;
  }
  if (name == "heat") {
    double t = get(params, "t", 1.0);
    m.arity = SymbolArity::tau_kappa;
    auto f = [t](const Vec& tau, const Vec&) { return std::exp(-t * l1_norm(tau)); };
    m.eval_tk = [f](const Vec&, const Vec& tau, const Vec& kappa) { return f(tau, kappa); };
    m.spatial = [](const Vec&) { return 1.0; };
    m.spectral_tk = f;
    return m;
  }
  throw std::invalid_argument("make_builtin_symbol: unknown built-in '" + name + "'");
}

}  // namespace grushin
