#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "grushin/geometry.hpp"
#include "grushin/operators.hpp"

namespace grushin {

// ---------------------------------------------------------------------------
// Operator handles: grid-to-grid linear maps with explicit adjoints.
// ---------------------------------------------------------------------------
struct OpHandle {
  std::function<GridFunction(const GridFunction&)> apply;
  std::function<GridFunction(const GridFunction&)> adjoint_apply;
  std::string label;
};

/// Band multiplier B D F (diagonal in coefficient space, self-adjoint for
/// real symbols).
OpHandle op_multiplier_joint(const SymbolFn& m, const DiscPtr& d);
OpHandle op_multiplier_eta(const SymbolFn& m, GrushinMode mode, const DiscPtr& d);

/// Separable symbol a(x) * spectral: M_a B D F; adjoint B D F M_a.
/// The spatial factor multiplies on the grid *after* synthesis, so products
/// T_p* T_q keep the two spatial factors pointwise adjacent.
OpHandle op_separable_joint(const SymbolFn& m, const DiscPtr& d);
OpHandle op_separable_eta(const SymbolFn& m, GrushinMode mode, const DiscPtr& d);

OpHandle op_identity_band(const DiscPtr& d);
OpHandle op_rank_one(const GridFunction& g, const GridFunction& h);  // f -> <f, g> h
OpHandle op_compose(const OpHandle& A, const OpHandle& B);           // A after B
OpHandle op_sum(const std::vector<OpHandle>& ops);

// ---------------------------------------------------------------------------
// operator_norm: randomized power iteration on T*T
// ---------------------------------------------------------------------------
struct NormOptions {
  double tol = 1e-4;     // relative Rayleigh stagnation threshold
  int max_iter = 60;     // per restart
  int restarts = 8;
  std::uint64_t seed = 20240901;
};

struct NormReport {
  double estimate = 0.0;  // certified lower bound on the operator norm
  int iterations = 0;     // total across restarts
  double residual = 0.0;  // last relative change of the winning restart
  std::uint64_t seed = 0;
  bool converged = true;
};

NormReport operator_norm(const OpHandle& T, const DiscPtr& d, const NormOptions& opt = {});

// ---------------------------------------------------------------------------
// Calderon-Vaillancourt refinement experiment
// ---------------------------------------------------------------------------
struct CvStep {
  int K = 0;
  int Lambda = 0;
  double op_norm = 0.0;
  double seminorm = 0.0;
  double ratio = 0.0;
};

struct CvReport {
  std::vector<CvStep> steps;
  bool pass = false;        // ratio grows < growth_tol per refinement step
  double max_growth = 0.0;  // max step-to-step ratio growth factor - 1
  std::string detail;
};

CvReport cv_experiment(const SymbolFn& m, const SymbolClassParams& p,
                       const DiscretizationParams& base,
                       const std::vector<std::pair<int, int>>& ladder, std::uint64_t seed,
                       double growth_tol = 0.10);

// ---------------------------------------------------------------------------
// Symbol decomposition into pieces chi_J(x) m psi_l(|tau|_1) zeta^S(|kappa|)
// ---------------------------------------------------------------------------
struct PieceIndex {
  std::size_t J = 0;
  int l = 0;
  int S = 0;
};

struct Pieces {
  std::vector<PieceIndex> index;  // deterministic order: J ascending, l ascending
  std::vector<SymbolFn> symbols;
  std::vector<OpHandle> ops;
  Partition partition;
  DiscPtr disc;
};

/// Requires an x-independent joint symbol (the spatial factor of every piece
/// is then exactly chi_J).
Pieces build_pieces(const SymbolFn& m, const Partition& part, const LittlewoodPaleyFamily& lp,
                    int l_min, int l_max, int S, const DiscPtr& d);

/// The kappa-cut total T^S (no spatial or dyadic cut).
OpHandle cut_total(const SymbolFn& m, const LittlewoodPaleyFamily& lp, int S, const DiscPtr& d);

// ---------------------------------------------------------------------------
// Cotlar-Stein piece matrices
// ---------------------------------------------------------------------------
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

struct CotlarReport {
  std::vector<PieceIndex> index;
  Eigen::MatrixXd M1;  // ||T_p^* T_q||
  Eigen::MatrixXd M2;  // ||T_p T_q^*||
  std::vector<double> center_distance;  // d(x_J, x_J') per (p, q), row-major
  FitResult m1_vs_l;   // log2(max M1 at offset) vs |l - l'|
  FitResult m2_vs_d;   // log(M2 entry) vs log(1 + d), |l - l'| <= 2 entries
};

CotlarReport cotlar_matrices(const Pieces& pieces, const NormOptions& opt = {});

// ---------------------------------------------------------------------------
// Weighted Plancherel ratios
// ---------------------------------------------------------------------------
struct PlancherelSample {
  double R = 0.0;
  std::size_t x_flat = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct PlancherelReport {
  std::vector<PlancherelSample> samples;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

/// base_m(tau, kappa) is dilated per R as F_R(tau, kappa) =
/// base_m(tau / R^2, kappa / R^2); p_norm is 2 or infinity (pass 0 for inf).
PlancherelReport weighted_plancherel_check(const SymbolFn& base_m, const std::vector<double>& Rs,
                                           int r, int p_norm, const DiscPtr& d,
                                           const std::vector<std::size_t>& x_nodes);

// ---------------------------------------------------------------------------
// Kernel identities
// ---------------------------------------------------------------------------
struct IdentityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // |lhs - rhs| / (|lhs| + eps)
};

/// d/d|lambda| of sum_mu m((2mu+1)|lambda|) Phi_mu^lambda(x') Phi_mu^lambda(y')
/// (central difference, step h) against the explicit five-term expansion
/// (spectral-argument derivative term plus the four index-shifted terms);
/// n1 = 1, truncation-free when m((2K+3)|lambda|) = 0.
IdentityResult kernel_identity_lambda_N1(const std::function<double(double)>& m,
                                         const std::function<double(double)>& dm, int K,
                                         double lam, double xp, double yp, double h);

/// (x'_j - y'_j) k_{m(H(lambda))}(x', y') against the ladder-commutator form
/// [(A_j + A_j^*) / (2 lambda), M] assembled in coefficient space
/// (the first factor is exactly multiplication by x'_j); `power` = 1 or 2
/// (iterated identity). Returns max entrywise error / max |lhs| over the
/// x' grid. Exact on the band when m vanishes on the top `power` shells.
double kernel_identity_xy(const std::function<double(double)>& m, int j, double lam, int K,
                          const Quadrature1D& grid, int n1 = 1, int power = 1);

// ---------------------------------------------------------------------------
// Dilation identity: delta_{t^{-1}} T delta_t vs the dilated symbol
// ---------------------------------------------------------------------------
/// Compares the conjugated operator (pure index relabeling between the base
/// discretization and its delta_t-matched copy) with the operator built from
/// m_t(x, tau, kappa) = m(x'/t, x''/t^2, t^2 tau, t^2 kappa) on random
/// band-limited inputs. Returns the relative L^2 residual.
double dilation_identity_check(const SymbolFn& m, double t, const DiscPtr& base,
                               std::uint64_t seed);

/// Least-squares line fit of y against x with R^2.
FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace grushin
