#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "rumdlab/dyadic.hpp"

namespace rumdlab {

inline constexpr double p_infinity = std::numeric_limits<double>::infinity();

// Finite-dimensional l_p^m. p in [1, inf].
struct LpSpace {
  double p = 2.0;
  long dim = 1;

  LpSpace() = default;
  LpSpace(double p_, long dim_) : p(p_), dim(dim_) {
    if (!(p >= 1.0))  // NaN rejected here as well
      throw std::invalid_argument("l_p exponent must satisfy p >= 1");
    if (dim < 1) throw std::invalid_argument("space dimension must be >= 1");
  }

  static LpSpace l1(long m) { return LpSpace(1.0, m); }
  static LpSpace l2(long m) { return LpSpace(2.0, m); }
  static LpSpace linf(long m) { return LpSpace(p_infinity, m); }

  bool is_l1() const { return p == 1.0; }
  bool is_l2() const { return p == 2.0; }
  bool is_linf() const { return p == p_infinity; }

  bool operator==(const LpSpace&) const = default;
};

inline double norm(std::span<const double> v, const LpSpace& S) {
  if (static_cast<long>(v.size()) != S.dim) throw std::invalid_argument("vector/space dimension mismatch");
  if (S.is_l1()) {
    double a = 0.0;
    for (double x : v) a += std::fabs(x);
    return a;
  }
  if (S.is_l2()) {
    double a = 0.0;
    for (double x : v) a += x * x;
    return std::sqrt(a);
  }
  if (S.is_linf()) {
    double a = 0.0;
    for (double x : v) a = std::max(a, std::fabs(x));
    return a;
  }
  double a = 0.0;
  for (double x : v) a += std::pow(std::fabs(x), S.p);
  return std::pow(a, 1.0 / S.p);
}

// 1/p + 1/p' = 1
inline LpSpace dual(const LpSpace& S) {
  if (S.is_l1()) return LpSpace::linf(S.dim);
  if (S.is_linf()) return LpSpace::l1(S.dim);
  return LpSpace(S.p / (S.p - 1.0), S.dim);
}

inline double dual_norm(std::span<const double> v, const LpSpace& S) { return norm(v, dual(S)); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Extreme points of the unit ball, enumerable only for p = 1 (the 2m signed
// unit vectors) and p = inf (the 2^m sign patterns).
inline long extreme_point_count(const LpSpace& S) {
  if (S.is_l1()) return 2 * S.dim;
  if (S.is_linf()) {
    if (S.dim > 30) throw std::invalid_argument("l_inf extreme set too large to enumerate");
    return 1L << S.dim;
  }
  throw std::invalid_argument("extreme points enumerable only for p in {1, inf}");
}

inline void extreme_point(const LpSpace& S, long idx, std::span<double> out) {
  long count = extreme_point_count(S);
  if (idx < 0 || idx >= count) throw std::invalid_argument("extreme point index out of range");
  if (static_cast<long>(out.size()) != S.dim) throw std::invalid_argument("output dimension mismatch");
  if (S.is_l1()) {
    std::fill(out.begin(), out.end(), 0.0);
    out[idx % S.dim] = idx < S.dim ? 1.0 : -1.0;
  } else {
    for (long j = 0; j < S.dim; ++j) out[j] = (idx >> j) & 1 ? -1.0 : 1.0;
  }
}

template <class Fn>
void for_each_extreme_point(const LpSpace& S, Fn&& fn) {
  long count = extreme_point_count(S);
  std::vector<double> buf(S.dim);
  for (long i = 0; i < count; ++i) {
    extreme_point(S, i, buf);
    fn(std::span<const double>(buf.data(), buf.size()));
  }
}

// Function Omega_n -> l_p^m under the uniform measure mu_n = 2^{-n}.
struct BochnerFunction {
  LpSpace space;
  Table table;

  BochnerFunction() = default;
  BochnerFunction(LpSpace s, Table t) : space(s), table(std::move(t)) {
    // Two admissible shapes: X-valued (pointwise dimension = space dim), or a
    // scalar function on Omega_n tagged with its own sequence norm
    // (rows = space dim) — the translation-martingale input.
    if (table.dim != space.dim && !(table.dim == 1 && table.rows == space.dim))
      throw std::invalid_argument("table dimension does not match space");
    depth_of_rows(table.rows);
  }
};

// (E_omega ||F(omega)||^q)^{1/q}
inline double bochner_norm(const BochnerFunction& F, double q) {
  if (!(q >= 1.0)) throw std::invalid_argument("Bochner exponent must satisfy q >= 1");
  double acc = 0.0;
  for (long r = 0; r < F.table.rows; ++r) acc += std::pow(norm(F.table.row_span(r), F.space), q);
  return std::pow(acc / static_cast<double>(F.table.rows), 1.0 / q);
}

}  // namespace rumdlab
