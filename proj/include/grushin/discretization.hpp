#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "grushin/hermite.hpp"
#include "grushin/rng.hpp"

namespace grushin {

/// Grid/band parameters. n2 = 0 selects the pure Hermite mode (no x'' factor,
/// a single implicit lambda = 1 fiber); otherwise n2 = 1 is required: the
/// operator layer works one x''-coordinate at a time.
struct DiscretizationParams {
  int n1 = 1;
  int n2 = 1;
  int K = 32;         // Hermite band |mu| <= K
  int Mp = 320;       // x' points per dimension (closed trapezoid on [-Lp, Lp])
  int Mpp = 64;       // x'' points (periodic, [0, Lpp))
  int Lambda = 16;    // lambda lattice = (2 pi / Lpp) {±1..±Lambda}
  double Lp = 11.0;
  double Lpp = 6.283185307179586476925287;  // 2 pi
};

class Discretization : public std::enable_shared_from_this<Discretization> {
 public:
  /// Builds grids, per-|lambda| bases and FFT plans; throws if any basis Gram
  /// error exceeds 1e-8 (the band would silently lose orthonormality).
  static std::shared_ptr<const Discretization> create(const DiscretizationParams& p);
  static std::shared_ptr<const Discretization> desk1d();
  static std::shared_ptr<const Discretization> desk2d();
  ~Discretization();

  const DiscretizationParams& params() const { return p_; }
  int n1() const { return p_.n1; }
  int n2() const { return p_.n2; }
  int K() const { return p_.K; }

  /// Signed lambda lattice in deterministic order (-Lambda..-1, 1..Lambda);
  /// in Hermite mode a single entry +2pi/Lpp is used so that |lambda| = 1.
  const std::vector<double>& lambdas() const { return lams_; }

  /// Per-|lambda| basis (cached; lam_mag must be a lattice magnitude).
  const HermiteBasis& basis(double lam_mag) const;

  std::size_t prime_size() const { return prime_size_; }  // Mp^n1
  std::size_t grid_size() const { return prime_size_ * static_cast<std::size_t>(sec_count_); }
  int sec_count() const { return sec_count_; }  // x'' nodes (1 in Hermite mode)

  /// Grid coordinates: x' of a prime node, x'' of a secondary node, and the
  /// flattened (x', x'') coordinate vector of a full grid node
  /// (flat = prime_index * sec_count + sec_index).
  std::vector<double> xp_node(std::size_t prime_index) const;
  double xpp_node(int m) const { return m * (p_.Lpp / sec_count_); }
  std::vector<double> x_full(std::size_t flat) const;

  double weight_prime(std::size_t prime_index) const;
  double weight_sec() const { return p_.n2 == 0 ? 1.0 : p_.Lpp / sec_count_; }
  /// Coefficient convention: c_{mu,lambda} = (1/Lpp) <f, Phi_mu^lambda e^{-i lambda x''}>
  /// so that a sampled basis element has unit coefficient, and synthesis is the
  /// plain sum over lambda. Parseval then carries a factor Lpp:
  ///   ||f||^2 = Lpp * sum |c|^2  (1 in Hermite mode).
  double spectral_weight() const { return p_.n2 == 0 ? 1.0 : p_.Lpp; }

  double max_gram_error() const { return max_gram_error_; }

  // x''-fiber DFTs (length sec_count; thread-safe after construction).
  // fiber_analysis:  out[b] = sum_m in[m] e^{+2 pi i m b / M}
  // fiber_synthesis: out[m] = sum_b in[b] e^{-2 pi i m b / M}
  void fiber_analysis(std::complex<double>* data) const;
  void fiber_synthesis(std::complex<double>* data) const;

  /// DFT bin of a lattice lambda (k mod Mpp for lambda = (2 pi / Lpp) k).
  int lambda_bin(int lattice_index) const;

 private:
  explicit Discretization(const DiscretizationParams& p);
  DiscretizationParams p_;
  std::vector<double> lams_;
  std::vector<std::unique_ptr<HermiteBasis>> bases_;  // index |k| - 1
  std::size_t prime_size_ = 0;
  int sec_count_ = 1;
  Quadrature1D prime_quad_;
  double max_gram_error_ = 0.0;
  void* plan_fwd_ = nullptr;  // fftw plans (opaque here)
  void* plan_inv_ = nullptr;
};

using DiscPtr = std::shared_ptr<const Discretization>;

/// Complex samples on the full grid, x''-index fastest.
struct GridFunction {
  DiscPtr disc;
  Eigen::VectorXcd values;

  static GridFunction zero(const DiscPtr& d);
  /// Sample a callable f(x: flattened coordinates) on the grid.
  static GridFunction sample(const DiscPtr& d,
                             const std::function<std::complex<double>(const std::vector<double>&)>& f);

  double norm() const;
  std::complex<double> dot(const GridFunction& other) const;  // <this, other>
};

/// Coefficients c_{mu, lambda} over the band, one CoeffVector per lattice
/// lambda in Discretization::lambdas() order.
struct SpectralField {
  DiscPtr disc;
  std::vector<CoeffVector> coeffs;

  static SpectralField zero(const DiscPtr& d);
  static SpectralField random(const DiscPtr& d, Rng& rng);  // iid complex normal

  double norm() const;
  std::complex<double> dot(const SpectralField& other) const;
  void scale(std::complex<double> a);
};

struct TransformStats {
  double input_norm = 0.0;
  double band_norm = 0.0;
  double dropped_fraction = 0.0;  // out-of-band energy fraction (lambda=0 mode,
                                  // |lambda| > Lambda, Hermite residual)
};

SpectralField forward(const GridFunction& f, TransformStats* stats = nullptr);
GridFunction backward(const SpectralField& F);

// ---------------------------------------------------------------------------
// Binary container (see README for the layout): fixed header + little-endian
// complex128 payload.
// ---------------------------------------------------------------------------
void save_grid(const std::string& path, const GridFunction& f);
GridFunction load_grid(const std::string& path, const DiscPtr& d);
void save_spectral(const std::string& path, const SpectralField& F);
SpectralField load_spectral(const std::string& path, const DiscPtr& d);

}  // namespace grushin
