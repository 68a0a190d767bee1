#include "grushin/discretization.hpp"

#include <fftw3.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "grushin/threads.hpp"

namespace grushin {

namespace {

constexpr double kGramTol = 1e-8;

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Discretization::Discretization(const DiscretizationParams& p) : p_(p) {
  if (p_.n1 < 1 || p_.n1 > 2) throw std::invalid_argument("Discretization: n1 must be 1 or 2");
  if (p_.n2 != 0 && p_.n2 != 1)
    throw std::invalid_argument("Discretization: n2 must be 0 (Hermite mode) or 1");
  if (p_.K < 0 || p_.Mp < 2 || p_.Lambda < 1 || p_.Lp <= 0.0 || p_.Lpp <= 0.0)
    throw std::invalid_argument("Discretization: bad parameters");
  sec_count_ = p_.n2 == 0 ? 1 : p_.Mpp;
  if (p_.n2 == 1 && 2 * p_.Lambda >= sec_count_)
    throw std::invalid_argument("Discretization: need Mpp > 2 Lambda (lattice aliasing)");

  prime_quad_ = uniform_trapezoid_grid(p_.Lp, p_.Mp);
  prime_size_ = 1;
  for (int d = 0; d < p_.n1; ++d) prime_size_ *= static_cast<std::size_t>(p_.Mp);

  const double unit = 2.0 * 3.14159265358979323846 / p_.Lpp;
  if (p_.n2 == 0) {
    lams_.push_back(1.0);
  } else {
    for (int k = -p_.Lambda; k <= p_.Lambda; ++k)
      if (k != 0) lams_.push_back(unit * k);
  }

  int mags = p_.n2 == 0 ? 1 : p_.Lambda;
  bases_.resize(mags);
  for (int a = 0; a < mags; ++a) {
    double mag = p_.n2 == 0 ? 1.0 : unit * (a + 1);
    bases_[a] = std::make_unique<HermiteBasis>(p_.n1, p_.K, mag, prime_quad_);
    max_gram_error_ = std::max(max_gram_error_, bases_[a]->gram_error_1d());
  }
  if (max_gram_error_ > kGramTol)
    throw std::runtime_error("Discretization: basis Gram error " +
                             std::to_string(max_gram_error_) + " exceeds 1e-8");

  if (p_.n2 == 1) {
    std::vector<std::complex<double>> scratch(sec_count_);
    plan_fwd_ = fftw_plan_dft_1d(sec_count_, as_fftw(scratch.data()), as_fftw(scratch.data()),
                                 FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_inv_ = fftw_plan_dft_1d(sec_count_, as_fftw(scratch.data()), as_fftw(scratch.data()),
                                 FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan_fwd_ || !plan_inv_) throw std::runtime_error("Discretization: FFT planning failed");
  }
}

Discretization::~Discretization() {
  if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

std::shared_ptr<const Discretization> Discretization::create(const DiscretizationParams& p) {
  return std::shared_ptr<const Discretization>(new Discretization(p));
}

std::shared_ptr<const Discretization> Discretization::desk1d() {
  DiscretizationParams p;
  p.Mp = 384;
  p.Lp = 42.0;
  p.Lpp = 32.0 * 3.14159265358979323846;  // lambda lattice unit 1/16
  return create(p);
}

std::shared_ptr<const Discretization> Discretization::desk2d() {
  DiscretizationParams p;
  p.n1 = 2;
  p.K = 16;
  p.Mp = 160;
  p.Mpp = 32;
  p.Lambda = 8;
  p.Lp = 8.5;
  return create(p);
}

const HermiteBasis& Discretization::basis(double lam_mag) const {
  if (p_.n2 == 0) return *bases_[0];
  const double unit = 2.0 * 3.14159265358979323846 / p_.Lpp;
  int a = static_cast<int>(std::lround(lam_mag / unit)) - 1;
  if (a < 0 || a >= static_cast<int>(bases_.size()))
    throw std::invalid_argument("Discretization::basis: not a lattice magnitude");
  return *bases_[a];
}

std::vector<double> Discretization::xp_node(std::size_t prime_index) const {
  std::vector<double> out(p_.n1);
  if (p_.n1 == 1) {
    out[0] = prime_quad_.nodes[prime_index];
  } else {
    out[0] = prime_quad_.nodes[prime_index / p_.Mp];
    out[1] = prime_quad_.nodes[prime_index % p_.Mp];
  }
  return out;
}

std::vector<double> Discretization::x_full(std::size_t flat) const {
  std::vector<double> out = xp_node(flat / sec_count_);
  if (p_.n2 == 1) out.push_back(xpp_node(static_cast<int>(flat % sec_count_)));
  return out;
}

double Discretization::weight_prime(std::size_t prime_index) const {
  if (p_.n1 == 1) return prime_quad_.weights[prime_index];
  return prime_quad_.weights[prime_index / p_.Mp] * prime_quad_.weights[prime_index % p_.Mp];
}

void Discretization::fiber_analysis(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), as_fftw(data), as_fftw(data));
}

void Discretization::fiber_synthesis(std::complex<double>* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_inv_), as_fftw(data), as_fftw(data));
}

int Discretization::lambda_bin(int lattice_index) const {
  // lams_ order: k = -Lambda..-1 then 1..Lambda
  int k = lattice_index < p_.Lambda ? lattice_index - p_.Lambda : lattice_index - p_.Lambda + 1;
  int b = k % sec_count_;
  return b < 0 ? b + sec_count_ : b;
}

// ---------------------------------------------------------------------------
// Containers
// ---------------------------------------------------------------------------

GridFunction GridFunction::zero(const DiscPtr& d) {
  GridFunction f;
  f.disc = d;
  f.values = Eigen::VectorXcd::Zero(d->grid_size());
  return f;
}

GridFunction GridFunction::sample(
    const DiscPtr& d, const std::function<std::complex<double>(const std::vector<double>&)>& f) {
  GridFunction g = zero(d);
  std::size_t n = d->grid_size();
  parallel_for(n, [&](std::size_t i) { g.values[i] = f(d->x_full(i)); });
  return g;
}

double GridFunction::norm() const { return std::sqrt(std::abs(dot(*this))); }

std::complex<double> GridFunction::dot(const GridFunction& other) const {
  if (disc.get() != other.disc.get() || values.size() != other.values.size())
    throw std::invalid_argument("GridFunction::dot: mismatched grids");
  const int S = disc->sec_count();
  std::complex<double> acc = 0.0;
  double ws = disc->weight_sec();
  for (std::size_t p = 0; p < disc->prime_size(); ++p) {
    std::complex<double> row = 0.0;
    for (int m = 0; m < S; ++m) {
      Eigen::Index i = static_cast<Eigen::Index>(p) * S + m;
      row += std::conj(other.values[i]) * values[i];
    }
    acc += disc->weight_prime(p) * ws * row;
  }
  return acc;
}

SpectralField SpectralField::zero(const DiscPtr& d) {
  SpectralField F;
  F.disc = d;
  F.coeffs.reserve(d->lambdas().size());
  for (std::size_t a = 0; a < d->lambdas().size(); ++a)
    F.coeffs.push_back(CoeffVector::zero(d->n1(), d->K()));
  return F;
}

SpectralField SpectralField::random(const DiscPtr& d, Rng& rng) {
  SpectralField F = zero(d);
  for (auto& c : F.coeffs)
    for (Eigen::Index i = 0; i < c.v.size(); ++i) c.v[i] = rng.complex_normal();
  return F;
}

double SpectralField::norm() const { return std::sqrt(std::abs(dot(*this))); }

std::complex<double> SpectralField::dot(const SpectralField& other) const {
  if (disc.get() != other.disc.get())
    throw std::invalid_argument("SpectralField::dot: mismatched discretizations");
  std::complex<double> acc = 0.0;
  for (std::size_t a = 0; a < coeffs.size(); ++a)
    acc += other.coeffs[a].v.dot(coeffs[a].v);  // Eigen dot conjugates its caller
  return disc->spectral_weight() * acc;
}

void SpectralField::scale(std::complex<double> a) {
  for (auto& c : coeffs) c.v *= a;
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

SpectralField forward(const GridFunction& f, TransformStats* stats) {
  const DiscPtr& d = f.disc;
  SpectralField F = SpectralField::zero(d);
  const std::size_t np = d->prime_size();
  const int S = d->sec_count();

  if (d->n2() == 0) {
    F.coeffs[0] = d->basis(1.0).transform(f.values);
  } else {
    // stage 1: per x'-node DFT over the x'' fiber, with the 1/Lpp coefficient
    // normalization folded in (ws / Lpp = 1 / Mpp)
    Eigen::MatrixXcd bins(np, S);  // bins(p, b)
    const double ws = 1.0 / S;
    parallel_for(np, [&](std::size_t p) {
      std::vector<std::complex<double>> row(S);
      for (int m = 0; m < S; ++m) row[m] = f.values[static_cast<Eigen::Index>(p) * S + m];
      d->fiber_analysis(row.data());
      for (int b = 0; b < S; ++b) bins(p, b) = ws * row[b];
    });
    // stage 2: per-lambda Hermite transform
    parallel_for(d->lambdas().size(), [&](std::size_t a) {
      double lam = d->lambdas()[a];
      Eigen::VectorXcd g = bins.col(d->lambda_bin(static_cast<int>(a)));
      F.coeffs[a] = d->basis(std::abs(lam)).transform(g);
    });
  }

  if (stats) {
    stats->input_norm = f.norm();
    stats->band_norm = F.norm();
    double in2 = stats->input_norm * stats->input_norm;
    double band2 = stats->band_norm * stats->band_norm;
    stats->dropped_fraction = in2 > 0.0 ? std::max(0.0, in2 - band2) / in2 : 0.0;
  }
  return F;
}

GridFunction backward(const SpectralField& F) {
  const DiscPtr& d = F.disc;
  GridFunction f = GridFunction::zero(d);
  const std::size_t np = d->prime_size();
  const int S = d->sec_count();

  if (d->n2() == 0) {
    f.values = d->basis(1.0).reconstruct(F.coeffs[0]);
    return f;
  }

  // stage 1: reconstruct each fiber on the x' grid
  Eigen::MatrixXcd bins = Eigen::MatrixXcd::Zero(np, S);
  std::vector<Eigen::VectorXcd> recon(d->lambdas().size());
  parallel_for(d->lambdas().size(), [&](std::size_t a) {
    double lam = d->lambdas()[a];
    recon[a] = d->basis(std::abs(lam)).reconstruct(F.coeffs[a]);
  });
  for (std::size_t a = 0; a < recon.size(); ++a)
    bins.col(d->lambda_bin(static_cast<int>(a))) += recon[a];

  // stage 2: per x'-node inverse DFT (plain lambda sum; no prefactor)
  parallel_for(np, [&](std::size_t p) {
    std::vector<std::complex<double>> row(S);
    for (int b = 0; b < S; ++b) row[b] = bins(p, b);
    d->fiber_synthesis(row.data());
    for (int m = 0; m < S; ++m) f.values[static_cast<Eigen::Index>(p) * S + m] = row[m];
  });
  return f;
}

// ---------------------------------------------------------------------------
// Binary container
//
// Layout (little-endian):
//   magic "GRSB" | u32 version=1 | u8 kind (0 grid, 1 spectral)
//   i32 n1, n2, K, Mp, Mpp, Lambda | f64 Lp, Lpp
//   u64 count | count * complex128 payload
// Grid payload: values in flat grid order (x'' fastest).
// Spectral payload: per lattice lambda in Discretization order, coefficients
// in IndexSet order.
// ---------------------------------------------------------------------------

namespace {

struct Header {
  char magic[4];
  std::uint32_t version;
  std::uint8_t kind;
  std::int32_t dims[6];
  double lens[2];
  std::uint64_t count;
};

void write_header(std::ofstream& os, std::uint8_t kind, const DiscretizationParams& p,
                  std::uint64_t count) {
  Header h{};
  std::memcpy(h.magic, "GRSB", 4);
  h.version = 1;
  h.kind = kind;
  h.dims[0] = p.n1;
  h.dims[1] = p.n2;
  h.dims[2] = p.K;
  h.dims[3] = p.Mp;
  h.dims[4] = p.Mpp;
  h.dims[5] = p.Lambda;
  h.lens[0] = p.Lp;
  h.lens[1] = p.Lpp;
  h.count = count;
  os.write(h.magic, 4);
  os.write(reinterpret_cast<const char*>(&h.version), 4);
  os.write(reinterpret_cast<const char*>(&h.kind), 1);
  os.write(reinterpret_cast<const char*>(h.dims), sizeof h.dims);
  os.write(reinterpret_cast<const char*>(h.lens), sizeof h.lens);
  os.write(reinterpret_cast<const char*>(&h.count), 8);
}

Header read_header(std::ifstream& is) {
  Header h{};
  is.read(h.magic, 4);
  is.read(reinterpret_cast<char*>(&h.version), 4);
  is.read(reinterpret_cast<char*>(&h.kind), 1);
  is.read(reinterpret_cast<char*>(h.dims), sizeof h.dims);
  is.read(reinterpret_cast<char*>(h.lens), sizeof h.lens);
  is.read(reinterpret_cast<char*>(&h.count), 8);
  if (!is || std::memcmp(h.magic, "GRSB", 4) != 0 || h.version != 1)
    throw std::runtime_error("binary container: bad header");
  return h;
}

void check_params(const Header& h, const DiscretizationParams& p, std::uint8_t kind) {
  bool ok = h.kind == kind && h.dims[0] == p.n1 && h.dims[1] == p.n2 && h.dims[2] == p.K &&
            h.dims[3] == p.Mp && h.dims[4] == p.Mpp && h.dims[5] == p.Lambda &&
            h.lens[0] == p.Lp && h.lens[1] == p.Lpp;
  if (!ok) throw std::runtime_error("binary container: parameters do not match discretization");
}

}  // namespace

void save_grid(const std::string& path, const GridFunction& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_grid: cannot open " + path);
  write_header(os, 0, f.disc->params(), static_cast<std::uint64_t>(f.values.size()));
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(std::complex<double>)));
  if (!os) throw std::runtime_error("save_grid: write failed for " + path);
}

GridFunction load_grid(const std::string& path, const DiscPtr& d) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_grid: cannot open " + path);
  Header h = read_header(is);
  check_params(h, d->params(), 0);
  GridFunction f = GridFunction::zero(d);
  if (h.count != static_cast<std::uint64_t>(f.values.size()))
    throw std::runtime_error("load_grid: payload size mismatch");
  is.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(f.values.size() * sizeof(std::complex<double>)));
  if (!is) throw std::runtime_error("load_grid: truncated payload");
  return f;
}

void save_spectral(const std::string& path, const SpectralField& F) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_spectral: cannot open " + path);
  std::uint64_t count = 0;
  for (const auto& c : F.coeffs) count += static_cast<std::uint64_t>(c.v.size());
  write_header(os, 1, F.disc->params(), count);
  for (const auto& c : F.coeffs)
    os.write(reinterpret_cast<const char*>(c.v.data()),
             static_cast<std::streamsize>(c.v.size() * sizeof(std::complex<double>)));
  if (!os) throw std::runtime_error("save_spectral: write failed for " + path);
}

SpectralField load_spectral(const std::string& path, const DiscPtr& d) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_spectral: cannot open " + path);
  Header h = read_header(is);
  check_params(h, d->params(), 1);
  SpectralField F = SpectralField::zero(d);
  std::uint64_t count = 0;
  for (const auto& c : F.coeffs) count += static_cast<std::uint64_t>(c.v.size());
  if (h.count != count) throw std::runtime_error("load_spectral: payload size mismatch");
  for (auto& c : F.coeffs)
    is.read(reinterpret_cast<char*>(c.v.data()),
            static_cast<std::streamsize>(c.v.size() * sizeof(std::complex<double>)));
  if (!is) throw std::runtime_error("load_spectral: truncated payload");
  return F;
}

}  // namespace grushin
