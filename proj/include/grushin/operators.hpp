#pragma once

#include "grushin/discretization.hpp"
#include "grushin/symbol.hpp"

namespace grushin {

enum class GrushinMode { sqrtG, G };

struct ApplyStats {
  double out_of_band_fraction = 0.0;  // input energy outside the (mu, lambda) band
};

// ---------------------------------------------------------------------------
// Band-side application: SpectralField -> SpectralField / GridFunction.
//
// Three paths, all algebraically the same operator:
//   * x-independent symbols act diagonally on coefficients;
//   * separable symbols (m = spatial * spectral) act diagonally, reconstruct
//     once, and multiply by the spatial factor on the grid;
//   * general x-dependent symbols are applied shell-by-shell: each spectral
//     shell is reconstructed in x and multiplied pointwise.
// ---------------------------------------------------------------------------

/// Diagonal coefficient scaling by an x-independent joint symbol
/// (tau = (2 mu + 1)|lambda| componentwise, kappa = -lambda).
void scale_joint_diagonal(const SymbolFn& m, SpectralField& F);

/// Diagonal scaling by an x-independent eta-form symbol at
/// eta = sqrt((2|mu|+n1)|lambda|) (mode sqrtG) or (2|mu|+n1)|lambda| (mode G).
void scale_grushin_diagonal(const SymbolFn& m, GrushinMode mode, SpectralField& F);

/// Full joint pseudo-multiplier on the grid: coefficient (mu, lambda) of f is
/// weighted by m(x, (2 mu + 1)|lambda|, -lambda).
GridFunction apply_joint_pseudo(const SymbolFn& m, const GridFunction& f,
                                ApplyStats* stats = nullptr);
/// Band version (input already spectral); for x-dependent symbols the output
/// is the band projection of the grid-level result.
SpectralField apply_joint_band(const SymbolFn& m, const SpectralField& F);

/// Grushin pseudo-multiplier with an eta-form symbol.
GridFunction apply_grushin_pseudo(const SymbolFn& m, const GridFunction& f, GrushinMode mode,
                                  ApplyStats* stats = nullptr);

/// Hermite pseudo-multiplier (n2 = 0 discretization): sum_{k <= K}
/// m(x, sqrt(2k+n1)) (P_k f)(x).
GridFunction apply_hermite_pseudo(const SymbolFn& m, const GridFunction& f,
                                  ApplyStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Fourier-inversion route: m(x, sqrt(L)) realized through the truncated
// Fourier series of m on [-P, P] and unitary phases exp(i eta~ sqrt(L)).
// ---------------------------------------------------------------------------
struct FourierInversionQuad {
  double R = 8.0;        // declared support radius: supp m(x, .) in [-R, R]
  int eta_samples = 1024;  // trapezoid points for the eta-integral
  int phase_terms = 512;   // one-sided count of phase frequencies eta~ = pi k / P
  double margin = 4.0;     // P = max(R, sqrt(max eigenvalue)) + margin
};
GridFunction apply_via_fourier_inversion(const SymbolFn& m, const GridFunction& f,
                                         const FourierInversionQuad& quad);

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// Kernel row k(x, .) of an x-independent joint multiplier F at the grid node
/// x (flat index); entries over all grid nodes y:
///   k(x,y) = (1/Lpp) sum_lambda sum_mu F((2mu+1)|lambda|, -lambda)
///            Phi_mu^lambda(x') Phi_mu^lambda(y') e^{-i lambda (x'' - y'')}.
Eigen::VectorXcd compute_kernel(const SymbolFn& F, const DiscPtr& d, std::size_t x_flat);

/// Quadrature application of a kernel row: sum_y k(x,y) f(y) w(y).
std::complex<double> kernel_row_apply(const Eigen::VectorXcd& row, const GridFunction& f);

/// Heat kernel / semigroup: F(tau, kappa) = e^{-t |tau|_1}.
Eigen::VectorXcd heat_kernel(double t, const DiscPtr& d, std::size_t x_flat);
GridFunction heat_apply(double t, const GridFunction& f);

// ---------------------------------------------------------------------------
// Bessel-potential Sobolev embedding check
// ---------------------------------------------------------------------------
struct SobolevCheck {
  double lhs = 0.0;   // sup_x |B(x,1)|^{1/2} |f(x)| (model volume)
  double rhs = 0.0;   // || (I + G)^{s/2} f ||_2
  double ratio = 0.0;
};
SobolevCheck bessel_sobolev_check(double s, const GridFunction& f);

}  // namespace grushin
