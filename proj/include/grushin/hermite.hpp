#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "grushin/multi_index.hpp"

namespace grushin {

// ---------------------------------------------------------------------------
// 1-D normalized Hermite functions
//
// phi_k(t) = (2^k k! sqrt(pi))^{-1/2} H_k(t) e^{-t^2/2}, evaluated by upward
// recurrence on the normalized functions themselves:
//   phi_0 = pi^{-1/4} e^{-t^2/2},  phi_1 = sqrt(2) t phi_0,
//   phi_{k+1} = sqrt(2/(k+1)) t phi_k - sqrt(k/(k+1)) phi_{k-1}.
// The normalized functions are uniformly bounded, so the recurrence neither
// overflows nor loses the leading digits; when the Gaussian factor underflows
// the whole column is (correctly) zero.
// ---------------------------------------------------------------------------

/// phi_0 ... phi_K at t, written into out (size K+1).
inline void hermite_column(int K, double t, double* out) {
  const double pi_m14 = 0.7511255444649424828587030047762276930510;  // pi^{-1/4}
  double g = std::exp(-0.5 * t * t);
  out[0] = pi_m14 * g;
  if (K == 0) return;
  out[1] = std::sqrt(2.0) * t * out[0];
  for (int k = 1; k < K; ++k) {
    out[k + 1] = std::sqrt(2.0 / (k + 1)) * t * out[k] -
                 std::sqrt(static_cast<double>(k) / (k + 1)) * out[k - 1];
  }
}

/// phi_k(t); evaluates the whole column internally.
inline double hermite_eval_1d(int k, double t) {
  if (k < 0) throw std::invalid_argument("hermite_eval_1d: k must be >= 0");
  std::vector<double> col(k + 1);
  hermite_column(k, t, col.data());
  return col[k];
}

/// Scaled Hermite function Phi_mu^lambda(x') = |lambda|^{n1/4} Phi_mu(|lambda|^{1/2} x').
/// Indices with a negative entry denote the zero function.
inline double scaled_hermite(const MultiIndex& mu, double lam_mag, const std::vector<double>& xp) {
  if (lam_mag <= 0.0) throw std::invalid_argument("scaled_hermite: lambda magnitude must be > 0");
  if (mu.dim() != static_cast<int>(xp.size()))
    throw std::invalid_argument("scaled_hermite: dimension mismatch");
  if (!mu.is_valid()) return 0.0;
  const double root = std::sqrt(lam_mag);
  const double scale1d = std::pow(lam_mag, 0.25);
  double val = 1.0;
  for (int j = 0; j < mu.dim(); ++j) {
    val *= scale1d * hermite_eval_1d(mu.entries[j], root * xp[j]);
  }
  return val;
}

// ---------------------------------------------------------------------------
// Index sets
// ---------------------------------------------------------------------------

/// Immutable enumeration of {mu : |mu| <= K} with O(1) lookup.
class IndexSet {
 public:
  IndexSet(int n1, int K) : n1_(n1), K_(K), list_(enumerate_multi_indices(n1, K)) {
    for (std::size_t i = 0; i < list_.size(); ++i) lookup_[key(list_[i])] = i;
  }

  int n1() const { return n1_; }
  int K() const { return K_; }
  std::size_t size() const { return list_.size(); }
  const MultiIndex& at(std::size_t i) const { return list_[i]; }
  const std::vector<MultiIndex>& list() const { return list_; }

  /// Position of mu, or -1 if mu is invalid or out of band.
  std::ptrdiff_t find(const MultiIndex& mu) const {
    if (!mu.is_valid() || mu.degree() > K_) return -1;
    auto it = lookup_.find(key(mu));
    return it == lookup_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  /// Shared cache (index sets are requested all over the operator layer).
  static std::shared_ptr<const IndexSet> get(int n1, int K) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const IndexSet>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{n1, K}];
    if (!slot) slot = std::make_shared<const IndexSet>(n1, K);
    return slot;
  }

 private:
  static std::uint64_t key(const MultiIndex& mu) {
    std::uint64_t k = 0;
    for (int e : mu.entries) k = k * 4096u + static_cast<std::uint64_t>(e + 1);
    return k;
  }
  int n1_, K_;
  std::vector<MultiIndex> list_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

// ---------------------------------------------------------------------------
// Coefficient vectors
// ---------------------------------------------------------------------------

/// Complex coefficients over {|mu| <= K}, aligned with IndexSet ordering.
struct CoeffVector {
  std::shared_ptr<const IndexSet> idx;
  Eigen::VectorXcd v;

  static CoeffVector zero(int n1, int K) {
    CoeffVector c;
    c.idx = IndexSet::get(n1, K);
    c.v = Eigen::VectorXcd::Zero(c.idx->size());
    return c;
  }

  /// Unit vector e_mu.
  static CoeffVector unit(int n1, int K, const MultiIndex& mu) {
    CoeffVector c = zero(n1, K);
    auto p = c.idx->find(mu);
    if (p < 0) throw std::invalid_argument("CoeffVector::unit: index out of band");
    c.v[p] = 1.0;
    return c;
  }

  /// Copy re-banded to cutoff K2 (explicit truncation or zero-padding).
  CoeffVector truncated(int K2) const {
    CoeffVector out = zero(idx->n1(), K2);
    for (std::size_t i = 0; i < idx->size(); ++i) {
      auto p = out.idx->find(idx->at(i));
      if (p >= 0) out.v[p] = v[i];
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Ladder operators (annihilation / creation), exact in coefficient space:
//   A_j      Phi_mu = sqrt(2 mu_j |lambda|)       Phi_{mu - e_j}
//   A_j^*    Phi_mu = sqrt((2 mu_j + 2) |lambda|) Phi_{mu + e_j}
// ---------------------------------------------------------------------------

enum class Ladder { annihilate, create };

/// Apply a ladder operator in coefficient space. `create` raises the band
/// cutoff by one (the caller truncates explicitly via CoeffVector::truncated).
inline CoeffVector apply_ladder(Ladder kind, int j, double lam_mag, const CoeffVector& c) {
  const int n1 = c.idx->n1();
  const int K = c.idx->K();
  if (j < 0 || j >= n1) throw std::invalid_argument("apply_ladder: bad coordinate");
  if (lam_mag <= 0.0) throw std::invalid_argument("apply_ladder: lambda magnitude must be > 0");
  const int Kout = (kind == Ladder::create) ? K + 1 : K;
  CoeffVector out = CoeffVector::zero(n1, Kout);
  for (std::size_t i = 0; i < c.idx->size(); ++i) {
    const MultiIndex& mu = c.idx->at(i);
    if (kind == Ladder::annihilate) {
      // contributes to mu - e_j with weight sqrt(2 mu_j lam)
      if (mu.entries[j] == 0) continue;  // vacuum annihilated
      auto p = out.idx->find(mu.shifted(j, -1));
      out.v[p] += c.v[i] * std::sqrt(2.0 * mu.entries[j] * lam_mag);
    } else {
      auto p = out.idx->find(mu.shifted(j, +1));
      out.v[p] += c.v[i] * std::sqrt((2.0 * mu.entries[j] + 2.0) * lam_mag);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature grids and the per-lambda basis
// ---------------------------------------------------------------------------

struct Quadrature1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Closed trapezoid rule on [-L, L] with M nodes.
inline Quadrature1D uniform_trapezoid_grid(double L, int M) {
  if (M < 2) throw std::invalid_argument("uniform_trapezoid_grid: need M >= 2");
  Quadrature1D q;
  q.nodes.resize(M);
  q.weights.resize(M);
  const double h = 2.0 * L / (M - 1);
  for (int i = 0; i < M; ++i) {
    q.nodes[i] = -L + h * i;
    q.weights[i] = (i == 0 || i == M - 1) ? h / 2.0 : h;
  }
  return q;
}

/// Discrete per-lambda Hermite basis on a shared x' tensor grid.
///
/// Stores the 1-D value matrix V(i,k) = lam^{1/4} phi_k(sqrt(lam) x_i); the
/// n1-dimensional basis is its tensor product. Forward/inverse transforms are
/// dense matrix products per dimension.
class HermiteBasis {
 public:
  HermiteBasis(int n1, int K, double lam_mag, Quadrature1D grid)
      : n1_(n1), K_(K), lam_(lam_mag), grid_(std::move(grid)), idx_(IndexSet::get(n1, K)) {
    if (lam_mag <= 0.0) throw std::invalid_argument("HermiteBasis: lambda magnitude must be > 0");
    const int M = static_cast<int>(grid_.nodes.size());
    V_.resize(M, K_ + 1);
    const double root = std::sqrt(lam_);
    const double s = std::pow(lam_, 0.25);
    std::vector<double> col(K_ + 1);
    for (int i = 0; i < M; ++i) {
      hermite_column(K_, root * grid_.nodes[i], col.data());
      for (int k = 0; k <= K_; ++k) V_(i, k) = s * col[k];
    }
    W_ = Eigen::Map<const Eigen::VectorXd>(grid_.weights.data(), M);
  }

  int n1() const { return n1_; }
  int K() const { return K_; }
  double lam() const { return lam_; }
  const Quadrature1D& grid() const { return grid_; }
  const std::shared_ptr<const IndexSet>& index_set() const { return idx_; }
  const Eigen::MatrixXd& values_1d() const { return V_; }

  /// Max |<phi_j, phi_k> - delta_jk| of the 1-D quadrature Gram matrix; the
  /// tensor-product Gram error is controlled by the same quantity.
  double gram_error_1d() const {
    Eigen::MatrixXd G = V_.transpose() * W_.asDiagonal() * V_;
    G -= Eigen::MatrixXd::Identity(K_ + 1, K_ + 1);
    return G.cwiseAbs().maxCoeff();
  }

  /// Quadrature inner product <Phi_mu, Phi_nu> on the tensor grid (exactly the
  /// product of 1-D inner products; computed from the cached 1-D Gram).
  Eigen::MatrixXd gram_1d() const { return V_.transpose() * W_.asDiagonal() * V_; }

  // --- transforms (n1 = 1 or 2) -------------------------------------------

  /// Forward transform: f sampled on the tensor grid (row-major over dims,
  /// i.e. n1=1: f[i]; n1=2: f[i0*M+i1]) -> coefficients c_mu = <f, Phi_mu>.
  CoeffVector transform(const Eigen::VectorXcd& f) const {
    const int M = static_cast<int>(grid_.nodes.size());
    CoeffVector c = CoeffVector::zero(n1_, K_);
    if (n1_ == 1) {
      if (f.size() != M) throw std::invalid_argument("transform: grid size mismatch");
      Eigen::VectorXcd wf = W_.asDiagonal() * f;
      Eigen::VectorXcd ck = V_.transpose() * wf;  // size K+1
      for (std::size_t i = 0; i < idx_->size(); ++i) c.v[i] = ck[idx_->at(i).entries[0]];
    } else if (n1_ == 2) {
      if (f.size() != static_cast<Eigen::Index>(M) * M)
        throw std::invalid_argument("transform: grid size mismatch");
      Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
          F(f.data(), M, M);
      // C(k0,k1) = sum_{i0,i1} w_i0 w_i1 V(i0,k0) V(i1,k1) F(i0,i1)
      Eigen::MatrixXcd T = (W_.asDiagonal() * V_).transpose() * F.cast<std::complex<double>>();
      Eigen::MatrixXcd C = T * (W_.asDiagonal() * V_);
      for (std::size_t i = 0; i < idx_->size(); ++i) {
        const MultiIndex& mu = idx_->at(i);
        c.v[i] = C(mu.entries[0], mu.entries[1]);
      }
    } else {
      throw std::invalid_argument("transform: only n1 in {1,2} supported");
    }
    return c;
  }

  /// Inverse transform: reconstruct sum_mu c_mu Phi_mu on the tensor grid.
  Eigen::VectorXcd reconstruct(const CoeffVector& c) const {
    const int M = static_cast<int>(grid_.nodes.size());
    if (c.idx.get() != idx_.get()) throw std::invalid_argument("reconstruct: basis mismatch");
    if (n1_ == 1) {
      Eigen::VectorXcd ck = Eigen::VectorXcd::Zero(K_ + 1);
      for (std::size_t i = 0; i < idx_->size(); ++i) ck[idx_->at(i).entries[0]] = c.v[i];
      return V_ * ck;
    }
    if (n1_ == 2) {
      Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(K_ + 1, K_ + 1);
      for (std::size_t i = 0; i < idx_->size(); ++i) {
        const MultiIndex& mu = idx_->at(i);
        C(mu.entries[0], mu.entries[1]) = c.v[i];
      }
      Eigen::MatrixXcd F = V_ * C * V_.transpose();
      Eigen::VectorXcd f(static_cast<Eigen::Index>(M) * M);
      for (int i0 = 0; i0 < M; ++i0)
        for (int i1 = 0; i1 < M; ++i1) f[static_cast<Eigen::Index>(i0) * M + i1] = F(i0, i1);
      return f;
    }
    throw std::invalid_argument("reconstruct: only n1 in {1,2} supported");
  }

  /// Tensor-grid quadrature weight at flat node index.
  double weight(Eigen::Index flat) const {
    const int M = static_cast<int>(grid_.nodes.size());
    if (n1_ == 1) return W_[flat];
    return W_[flat / M] * W_[flat % M];
  }

 private:
  int n1_, K_;
  double lam_;
  Quadrature1D grid_;
  std::shared_ptr<const IndexSet> idx_;
  Eigen::MatrixXd V_;
  Eigen::VectorXd W_;
};

// ---------------------------------------------------------------------------
// lambda-derivative of the basis: right-hand side of the identity
//   d/d|lambda| Phi_mu^lambda(x')
//     = (1/(4|lambda|)) sum_j [ -sqrt((mu_j+1)(mu_j+2)) Phi_{mu+2e_j}^lambda
//                               +sqrt(mu_j(mu_j-1))     Phi_{mu-2e_j}^lambda ](x')
// ---------------------------------------------------------------------------

inline double lambda_derivative_rhs(const MultiIndex& mu, double lam_mag,
                                    const std::vector<double>& xp) {
  if (lam_mag <= 0.0) throw std::invalid_argument("lambda_derivative_rhs: lambda must be > 0");
  double acc = 0.0;
  for (int j = 0; j < mu.dim(); ++j) {
    const double mj = mu.entries[j];
    acc -= std::sqrt((mj + 1.0) * (mj + 2.0)) * scaled_hermite(mu.shifted(j, +2), lam_mag, xp);
    if (mu.entries[j] >= 2)
      acc += std::sqrt(mj * (mj - 1.0)) * scaled_hermite(mu.shifted(j, -2), lam_mag, xp);
  }
  return acc / (4.0 * lam_mag);
}

}  // namespace grushin
