#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace grushin {

/// Deterministic random stream.
///
/// Wraps mt19937_64 but maps raw words to doubles directly instead of going
/// through std::uniform_real_distribution (whose output is
/// implementation-defined). Every randomized procedure in the project draws
/// from this class so that a seed pins the exact sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller (deterministic two-draw form).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  std::complex<double> complex_normal() {
    double re = normal();
    double im = normal();
    return {re, im};
  }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) { return eng_() % n; }

  /// Derive an independent child stream (used to give parallel work items
  /// their own deterministic streams regardless of execution order).
  Rng child(std::uint64_t salt) const {
    std::uint64_t s = seed_ ^ 0x853c49e6748fea9bULL;
    s ^= salt * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL;
    s ^= s >> 33;
    s *= 0xff51afd7ed558ccdULL;
    s ^= s >> 33;
    return Rng(s);
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_;
};

}  // namespace grushin
