#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grushin/bump.hpp"

namespace grushin {

using Vec = std::vector<double>;

inline double l1_norm(const Vec& v) {
  double s = 0.0;
  for (double t : v) s += std::abs(t);
  return s;
}
inline double l2_norm(const Vec& v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Littlewood-Paley dyadic family
//
//   psi_1 supported in (1/2, 2), psi_l(eta) = psi_1(2^{-(l-1)} eta) for l >= 1,
//   psi_0 = 1 - sum_{l >= 1} psi_l on [0, 2), and the telescoping identity
//   sum_{j in Z} psi_1(2^j eta) = 1 holds exactly for eta > 0 by construction:
//   psi_1 = G / sum_j G(2^j .) with G(eta) = g(eta - 1/2) g(2 - eta).
// ---------------------------------------------------------------------------
class LittlewoodPaleyFamily {
 public:
  /// Raw (un-normalized) bump supported in (1/2, 2).
  static double raw(double eta) {
    if (eta <= 0.5 || eta >= 2.0) return 0.0;
    return mollifier_g(eta - 0.5) * mollifier_g(2.0 - eta);
  }

  /// psi_1: supported in (1/2, 2), telescoping partition member.
  double psi1(double eta) const {
    if (eta <= 0.5 || eta >= 2.0) return 0.0;
    double num = raw(eta);
    if (num == 0.0) return 0.0;
    // denominator: sum over the (at most two) j with 2^j eta in (1/2, 2)
    double den = 0.0;
    int jc = static_cast<int>(std::floor(-std::log2(eta)));
    for (int j = jc - 1; j <= jc + 2; ++j) den += raw(std::ldexp(eta, j));
    return num / den;
  }

  /// psi_l for l >= 1 (psi_l(eta) = psi_1(2^{-(l-1)} eta)); l = 0 gives psi0.
  double psi(int l, double eta) const {
    if (l == 0) return psi0(eta);
    return psi1(std::ldexp(eta, 1 - l));
  }

  /// psi_0 = 1 - sum_{l>=1} psi_l, supported in [0, 1), == 1 at 0.
  double psi0(double eta) const {
    if (eta <= 0.0) return 1.0;
    if (eta >= 1.0) return 0.0;
    // sum_{l>=1} psi_l(eta) = sum_{j<=0} psi_1(2^j eta)
    double s = 0.0;
    int jc = static_cast<int>(std::floor(-std::log2(eta)));
    for (int j = jc - 1; j <= jc + 2; ++j)
      if (j <= 0) s += psi1(std::ldexp(eta, j));
    return 1.0 - s;
  }

  /// Frequency cutoff zeta^S(|kappa|) = sum_{j <= S} psi_1(2^j |kappa|).
  double zeta(int S, double kappa_mag) const {
    if (kappa_mag <= 0.0) return 0.0;
    double s = 0.0;
    int jc = static_cast<int>(std::floor(-std::log2(kappa_mag)));
    for (int j = jc - 1; j <= jc + 2; ++j)
      if (j <= S) s += psi1(std::ldexp(kappa_mag, j));
    return s;
  }
};

inline LittlewoodPaleyFamily make_littlewood_paley() { return LittlewoodPaleyFamily{}; }

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

enum class SymbolArity { eta, x_eta, tau_kappa, x_tau_kappa };

/// Black-box symbol evaluator. Depending on arity either the eta-form
/// m(x, eta) or the joint-spectrum form m(x, tau, kappa) is active; for the
/// x-independent arities the x argument is ignored.
///
/// A symbol may declare a product structure m = spatial(x) * spectral(.),
/// which downstream operator code exploits for a factored (algebraically
/// identical) application path. It may also carry analytic eta-derivatives.
struct SymbolFn {
  SymbolArity arity = SymbolArity::eta;
  int smoothness_order = 8;
  std::string label;

  std::function<double(const Vec& x, double eta)> eval_eta;
  std::function<double(const Vec& x, const Vec& tau, const Vec& kappa)> eval_tk;

  // optional product structure (both members set, or neither)
  std::function<double(const Vec& x)> spatial;
  std::function<double(double eta)> spectral_eta;
  std::function<double(const Vec& tau, const Vec& kappa)> spectral_tk;

  // optional analytic derivative d^l/d eta^l m(x, eta)
  std::function<double(const Vec& x, double eta, int l)> eta_derivative;

  bool eta_form() const { return arity == SymbolArity::eta || arity == SymbolArity::x_eta; }
  bool x_dependent() const {
    return arity == SymbolArity::x_eta || arity == SymbolArity::x_tau_kappa;
  }
  bool separable() const { return static_cast<bool>(spatial); }

  double operator()(const Vec& x, double eta) const { return eval_eta(x, eta); }
  double operator()(const Vec& x, const Vec& tau, const Vec& kappa) const {
    return eval_tk(x, tau, kappa);
  }
};

/// Symbol class parameters (order sigma, type (rho, delta), derivative budget N).
struct SymbolClassParams {
  double sigma = 0.0;
  double rho = 1.0;
  double delta = 0.0;
  int N = 2;
};

/// Probe lattice for seminorm estimation: x points plus either eta points or
/// (tau, kappa) points, matching the symbol arity.
struct ProbeSet {
  std::vector<Vec> x;                        // may hold one empty Vec for x-independent symbols
  std::vector<double> eta;                   // eta-arity probes
  std::vector<std::pair<Vec, Vec>> tau_kappa;  // joint-arity probes
};

/// Log-spaced eta probes covering dyadic shells up to 2^{Lmax+1}, plus a
/// uniform x lattice in the given box (n1 + n2 coordinates, half-widths in
/// `half_widths`, `per_dim` points per coordinate).
ProbeSet default_probes(SymbolArity arity, int n1, int n2, double eta_max,
                        const Vec& half_widths, int per_dim, int eta_count);

struct SeminormReport {
  double value = 0.0;
  std::string argmax;   // human-readable probe/derivative attaining the sup
  int skipped = 0;      // probes skipped due to non-finite finite differences
};

/// Weighted-derivative seminorm: sup over derivative words |Gamma| + l <= N
/// and probes of (1 + base)^{-sigma/2 + (1+rho) l/2 - delta |Gamma|/2} |D m|,
/// where base = eta (eta arities) or |tau| + |kappa| (joint arities), Gamma
/// runs over compositions of the fields X_j = d/dx'_j, X_{j,k} = x'_j d/dx''_k,
/// and l counts spectral derivatives. Derivatives use analytic evaluators when
/// declared, else Richardson-extrapolated central differences.
SeminormReport seminorm(const SymbolFn& m, const SymbolClassParams& p, const ProbeSet& probes,
                        int n1, int n2);

/// Dyadic piece: m * psi_l(arg) where arg is eta, |tau|_1, or |tau|_1 + |kappa|_1.
enum class DyadicVariant { eta, tau_l1, tau_kappa_l1 };
SymbolFn dyadic_piece(const SymbolFn& m, int l, const LittlewoodPaleyFamily& lp,
                      DyadicVariant variant);

/// Frequency cutoff (and optional spatial window): m * zeta^S(|kappa|) * chi(x).
/// chi_x may be empty; symbols must have a tau_kappa arity.
SymbolFn kappa_cutoff(const SymbolFn& m, int S, const LittlewoodPaleyFamily& lp,
                      std::function<double(const Vec& x)> chi_x = nullptr);

struct CancellationReport {
  bool pass = false;
  int order = 0;
  // per |beta| <= order: fitted decay slope of log|d^beta m| vs log|kappa|
  std::vector<double> slopes;
  std::vector<double> final_magnitudes;
  std::string detail;
};

/// Checks lim_{kappa -> 0} d_kappa^beta m = 0 for all |beta| <= order along a
/// decreasing path of kappa magnitudes (report-only; pass iff magnitudes
/// decrease to below tol for every beta).
CancellationReport check_cancellation(const SymbolFn& m, int order, const std::vector<double>& path,
                                      int n1, int n2, double tol = 1e-6);

/// Named built-in symbols used by experiments and the CLI config schema:
///   constant         {value}
///   power-decay      {exponent}                    (1+eta)^{-exponent}
///   sinusoidal-x     {exponent}                    sin(x'_1)(1+eta)^{-exponent}
///   power-growth     {exponent}                    (1+eta)^{+exponent} (negative control)
///   bump-eta         {lo, hi, width}               plateau bump in eta
///   sin-kappa-power  {power, tau_lo, tau_hi, width} (sin kappa_1)^power * bump(|tau|_1)
///   cancellation-boost {tau_lo, tau_hi, tau_width, power, k0, k1, kf, q1, q2,
///                     smooth, scale}  bump(|tau|_1 s) * (kappa_1 s)^power *
///                     exp(E(ln|kappa_1 s|)) with E a smoothed piecewise-log-
///                     linear amplitude profile (slopes 0/q1/q2/0 at knots
///                     k0/k1/kf); vanishes to order `power` at kappa = 0
///   heat             {t}                           e^{-t |tau|_1}
SymbolFn make_builtin_symbol(const std::string& name, const std::map<std::string, double>& params);

}  // namespace grushin
