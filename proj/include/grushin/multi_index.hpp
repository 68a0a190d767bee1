#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace grushin {

/// Hermite ladder multi-index mu in N^{n1}.
///
/// Entries are stored as signed integers so that shifted indices
/// (mu - 2 e_j, ...) can be represented; any index with a negative entry
/// denotes the zero function by convention, and callers must check
/// `is_valid()` before evaluating a basis function.
struct MultiIndex {
  std::vector<int> entries;

  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> e) : entries(std::move(e)) {}
  static MultiIndex zeros(int n) { return MultiIndex(std::vector<int>(n, 0)); }

  int dim() const { return static_cast<int>(entries.size()); }

  /// l1 degree |mu| (sum of entries); only meaningful for valid indices.
  int degree() const { return std::accumulate(entries.begin(), entries.end(), 0); }

  /// True iff every entry is >= 0 (otherwise the index denotes the zero function).
  bool is_valid() const {
    for (int e : entries)
      if (e < 0) return false;
    return true;
  }

  MultiIndex shifted(int j, int delta) const {
    MultiIndex out = *this;
    out.entries[j] += delta;
    return out;
  }

  bool operator==(const MultiIndex& o) const { return entries == o.entries; }
  bool operator!=(const MultiIndex& o) const { return !(*this == o); }
};

/// All multi-indices with |mu| <= K in dimension n, in graded
/// lexicographic order (deterministic enumeration shared by every module).
inline std::vector<MultiIndex> enumerate_multi_indices(int n, int K) {
  std::vector<MultiIndex> out;
  std::vector<int> cur(n, 0);
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == n - 1) {
      cur[pos] = remaining;
      out.push_back(MultiIndex(cur));
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      cur[pos] = v;
      rec(pos + 1, remaining - v);
    }
  };
  for (int deg = 0; deg <= K; ++deg) rec(0, deg);
  return out;
}

/// Number of multi-indices of exact degree k in dimension n (shell size).
inline std::int64_t shell_count(int n, int k) {
  // C(k + n - 1, n - 1)
  std::int64_t c = 1;
  for (int i = 1; i <= n - 1; ++i) c = c * (k + i) / i;
  return c;
}

}  // namespace grushin
