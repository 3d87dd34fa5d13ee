#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rumdlab {

inline constexpr int max_depth = 24;

inline void check_depth(int n) {
  if (n < 1 || n > max_depth) throw std::invalid_argument("dyadic depth n must be in [1, 24]");
}

// Point of Omega_n = {-1,+1}^n. Coordinates are packed into `bits` with bit
// (n-k) encoding omega_k (0 -> +1, 1 -> -1), so that tables indexed by
// `bits` are ordered by the enumeration index i(omega) = bits + 1.
struct DyadicPoint {
  int n = 0;
  std::uint32_t bits = 0;

  DyadicPoint() = default;
  DyadicPoint(int n_, std::uint32_t bits_) : n(n_), bits(bits_) {
    check_depth(n);
    assert(bits >> n == 0);
  }

  static DyadicPoint from_signs(const std::vector<int>& signs) {
    check_depth(static_cast<int>(signs.size()));
    int n = static_cast<int>(signs.size());
    std::uint32_t b = 0;
    for (int k = 1; k <= n; ++k) {
      if (signs[k - 1] != 1 && signs[k - 1] != -1)
        throw std::invalid_argument("signs must be +1 or -1");
      if (signs[k - 1] == -1) b |= 1u << (n - k);
    }
    return DyadicPoint(n, b);
  }

  int sign(int k) const {  // k in [1, n]
    assert(k >= 1 && k <= n);
    return (bits >> (n - k)) & 1u ? -1 : 1;
  }

  std::vector<int> signs() const {
    std::vector<int> s(n);
    for (int k = 1; k <= n; ++k) s[k - 1] = sign(k);
    return s;
  }

  DyadicPoint with_flipped(int k) const {
    assert(k >= 1 && k <= n);
    return DyadicPoint(n, bits ^ (1u << (n - k)));
  }

  // b -> complement of b: every coordinate negated
  DyadicPoint negated() const { return DyadicPoint(n, ~bits & ((1u << n) - 1u)); }

  std::uint32_t prefix_bits(int k) const {  // first k coordinates, k in [0, n]
    assert(k >= 0 && k <= n);
    return k == 0 ? 0u : bits >> (n - k);
  }

  bool operator==(const DyadicPoint&) const = default;
};

// i(omega) = 1 + (1-omega_n)/2 + (1-omega_{n-1})/2 * 2 + ... + (1-omega_1)/2 * 2^{n-1},
// which telescopes to bits + 1 under the packing above.
inline long index_of(const DyadicPoint& w) { return static_cast<long>(w.bits) + 1; }

inline DyadicPoint point_of_index(int n, long i) {
  check_depth(n);
  if (i < 1 || i > (1L << n)) throw std::invalid_argument("index out of [1, 2^n]");
  return DyadicPoint(n, static_cast<std::uint32_t>(i - 1));
}

// I(omega_1..omega_k): all points of Omega_n extending the k-prefix. Under
// the index map this is the contiguous block of 2^{n-k} indices starting at
// (prefix << (n-k)) + 1.
struct DyadicInterval {
  int n = 0;
  int k = 0;                   // prefix length, 0 = all of Omega_n
  std::uint32_t prefix = 0;    // k bits, most significant = omega_1

  DyadicInterval() = default;
  DyadicInterval(int n_, int k_, std::uint32_t prefix_) : n(n_), k(k_), prefix(prefix_) {
    check_depth(n);
    if (k < 0 || k > n) throw std::invalid_argument("prefix length out of [0, n]");
    assert(k == 32 || prefix >> k == 0);
  }

  static DyadicInterval of_prefix(const DyadicPoint& w, int k) {
    return DyadicInterval(w.n, k, w.prefix_bits(k));
  }

  long first_index() const { return (static_cast<long>(prefix) << (n - k)) + 1; }
  long length() const { return 1L << (n - k); }
  long last_index() const { return first_index() + length() - 1; }

  bool contains(const DyadicPoint& w) const {
    return w.n == n && w.prefix_bits(k) == prefix;
  }

  // halves I(prefix, +1) and I(prefix, -1), in that (index) order
  std::pair<DyadicInterval, DyadicInterval> children() const {
    if (k == n) throw std::invalid_argument("interval of full depth has no children");
    return {DyadicInterval(n, k + 1, prefix << 1),
            DyadicInterval(n, k + 1, (prefix << 1) | 1u)};
  }

  bool operator==(const DyadicInterval&) const = default;
};

inline std::vector<long> interval_indices(const DyadicInterval& I) {
  std::vector<long> out(I.length());
  long first = I.first_index();
  for (long j = 0; j < I.length(); ++j) out[j] = first + j;
  return out;
}

// Value table over Omega_n: row b holds the vector attached to the point
// with packed bits b (i.e. rows are in index order).
struct Table {
  long rows = 0;
  long dim = 0;
  std::vector<double> v;

  Table() = default;
  Table(long rows_, long dim_) : rows(rows_), dim(dim_), v(rows_ * dim_, 0.0) {}

  double* row(long r) {
    assert(r >= 0 && r < rows);
    return v.data() + r * dim;
  }
  const double* row(long r) const {
    assert(r >= 0 && r < rows);
    return v.data() + r * dim;
  }
  std::span<const double> row_span(long r) const { return {row(r), static_cast<size_t>(dim)}; }
  std::span<double> row_span(long r) { return {row(r), static_cast<size_t>(dim)}; }
};

inline int depth_of_rows(long rows) {
  for (int n = 0; n <= max_depth; ++n)
    if ((1L << n) == rows) return n;
  throw std::invalid_argument("table row count is not a power of two within depth cap");
}

// E(M | F_k): average the terminal table over each dyadic block of size
// 2^{n-k}. Averages of dyadic rationals stay exact in doubles for the
// canonical martingales.
inline Table conditional_expectation(const Table& terminal, int k) {
  int n = depth_of_rows(terminal.rows);
  if (k < 0 || k > n) throw std::invalid_argument("level k out of [0, n]");
  long block = 1L << (n - k);
  Table out(terminal.rows, terminal.dim);
  for (long s = 0; s < terminal.rows; s += block) {
    double* acc = out.row(s);
    for (long r = s; r < s + block; ++r) {
      const double* src = terminal.row(r);
      for (long j = 0; j < terminal.dim; ++j) acc[j] += src[j];
    }
    double inv = 1.0 / static_cast<double>(block);
    for (long j = 0; j < terminal.dim; ++j) acc[j] *= inv;
    for (long r = s + 1; r < s + block; ++r) {
      double* dst = out.row(r);
      for (long j = 0; j < terminal.dim; ++j) dst[j] = acc[j];
    }
  }
  return out;
}

// Same values, one row per k-prefix (2^k rows).
inline Table conditional_expectation_compact(const Table& terminal, int k) {
  int n = depth_of_rows(terminal.rows);
  if (k < 0 || k > n) throw std::invalid_argument("level k out of [0, n]");
  long block = 1L << (n - k);
  Table out(1L << k, terminal.dim);
  for (long p = 0; p < out.rows; ++p) {
    double* acc = out.row(p);
    for (long r = p * block; r < (p + 1) * block; ++r) {
      const double* src = terminal.row(r);
      for (long j = 0; j < terminal.dim; ++j) acc[j] += src[j];
    }
    double inv = 1.0 / static_cast<double>(block);
    for (long j = 0; j < terminal.dim; ++j) acc[j] *= inv;
  }
  return out;
}

// [dM_0, dM_1, ..., dM_n] with dM_0 = M_0 and dM_k = M_k - M_{k-1}.
inline std::vector<Table> differences(const Table& terminal) {
  int n = depth_of_rows(terminal.rows);
  std::vector<Table> d;
  d.reserve(n + 1);
  Table prev = conditional_expectation(terminal, 0);
  d.push_back(prev);
  for (int k = 1; k <= n; ++k) {
    Table cur = conditional_expectation(terminal, k);
    Table dk(terminal.rows, terminal.dim);
    for (size_t i = 0; i < dk.v.size(); ++i) dk.v[i] = cur.v[i] - prev.v[i];
    d.push_back(std::move(dk));
    prev = std::move(cur);
  }
  return d;
}

// max_{0 <= j <= k} ||M_j(omega)||, norm supplied by the caller.
template <class NormFn>
double maximal_function(const Table& terminal, int k, const DyadicPoint& w, NormFn&& nrm) {
  int n = depth_of_rows(terminal.rows);
  if (w.n != n) throw std::invalid_argument("point depth does not match table");
  if (k < 0 || k > n) throw std::invalid_argument("level k out of [0, n]");
  std::vector<double> acc(terminal.dim, 0.0);
  double best = 0.0;
  // level averages computed coarse-to-fine over the nested blocks around w
  for (int j = 0; j <= k; ++j) {
    long block = 1L << (n - j);
    long start = (static_cast<long>(w.prefix_bits(j))) << (n - j);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (long r = start; r < start + block; ++r) {
      const double* src = terminal.row(r);
      for (long jj = 0; jj < terminal.dim; ++jj) acc[jj] += src[jj];
    }
    double inv = 1.0 / static_cast<double>(block);
    for (long jj = 0; jj < terminal.dim; ++jj) acc[jj] *= inv;
    double v = nrm(std::span<const double>(acc.data(), acc.size()));
    if (v > best) best = v;
  }
  return best;
}

}  // namespace rumdlab
