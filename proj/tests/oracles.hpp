#pragma once

// Independent reference implementations for the test suite.  Everything here
// follows the definitions literally -- block-by-block averaging, full sign
// enumeration, O(4^n) loops -- and never calls the library's fast paths, so
// agreement is evidence rather than tautology.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rumdlab/dyadic.hpp"
#include "rumdlab/spaces.hpp"

namespace rumdlab::oracle {

// E(f | F_k) by literal averaging over the 2^{n-k} rows sharing each k-bit
// prefix; quadratic in the table size on purpose.
inline Table cond_exp_naive(const Table& terminal, int k) {
  const int n = depth_of_rows(terminal.rows);
  Table out(terminal.rows, terminal.dim);
  const long block = 1L << (n - k);
  for (long r = 0; r < terminal.rows; ++r) {
    const long first = (r / block) * block;
    for (long s = first; s < first + block; ++s)
      for (long j = 0; j < terminal.dim; ++j)
        out.row(r)[j] += terminal.row(s)[j];
    for (long j = 0; j < terminal.dim; ++j) out.row(r)[j] /= static_cast<double>(block);
  }
  return out;
}

// Row `row` of dM_k = E(f|F_k) - E(f|F_{k-1}); dM_0 = E(f|F_0).
inline std::vector<double> difference_naive(const Table& terminal, int k, long row) {
  Table cur = cond_exp_naive(terminal, k);
  std::vector<double> d(cur.row(row), cur.row(row) + cur.dim);
  if (k > 0) {
    Table prev = cond_exp_naive(terminal, k - 1);
    for (long j = 0; j < cur.dim; ++j) d[j] -= prev.row(row)[j];
  }
  return d;
}

// E_eps || sum_k eps_k v_k ||_S^q over all 2^k sign patterns, no root (the
// library's moment convention).
inline double sign_power_mean_naive(const std::vector<std::vector<double>>& vs,
                                    const LpSpace& S, double q) {
  const int k = static_cast<int>(vs.size());
  const long total = 1L << k;
  std::vector<double> acc(S.dim);
  double mean = 0.0;
  for (long e = 0; e < total; ++e) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = 0; i < k; ++i) {
      const double s = (e >> i) & 1 ? -1.0 : 1.0;
      for (long j = 0; j < S.dim; ++j) acc[j] += s * vs[i][j];
    }
    mean += std::pow(norm(acc, S), q);
  }
  return mean / static_cast<double>(total);
}

// (E_eps || sum_k eps_k v_k ||_S^q)^{1/q} over all 2^k sign patterns.
inline double sign_moment_naive(const std::vector<std::vector<double>>& vs,
                                const LpSpace& S, double q) {
  const int k = static_cast<int>(vs.size());
  const long total = 1L << k;
  std::vector<double> acc(S.dim);
  double mean = 0.0;
  for (long e = 0; e < total; ++e) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = 0; i < k; ++i) {
      const double s = (e >> i) & 1 ? -1.0 : 1.0;
      for (long j = 0; j < S.dim; ++j) acc[j] += s * vs[i][j];
    }
    mean += std::pow(norm(acc, S), q);
  }
  return std::pow(mean / static_cast<double>(total), 1.0 / q);
}

// sup_eps || sum_k eps_k v_k ||_S over all 2^k sign patterns.
inline double sign_sup_naive(const std::vector<std::vector<double>>& vs,
                             const LpSpace& S) {
  const int k = static_cast<int>(vs.size());
  const long total = 1L << k;
  std::vector<double> acc(S.dim);
  double best = 0.0;
  for (long e = 0; e < total; ++e) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int i = 0; i < k; ++i) {
      const double s = (e >> i) & 1 ? -1.0 : 1.0;
      for (long j = 0; j < S.dim; ++j) acc[j] += s * vs[i][j];
    }
    best = std::max(best, norm(acc, S));
  }
  return best;
}

// || sum_k eps_k v_k ||_S for one sign pattern, eps_k = +1 when bit (k-1) of
// `eps` is clear (the library's packing for sign enumeration).
inline double signed_sum_norm(const std::vector<std::vector<double>>& vs,
                              const LpSpace& S, std::uint32_t eps) {
  std::vector<double> acc(S.dim, 0.0);
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const double s = (eps >> i) & 1u ? -1.0 : 1.0;
    for (long j = 0; j < S.dim; ++j) acc[j] += s * vs[i][j];
  }
  return norm(acc, S);
}

// Deterministic test-vector source, independent of the library generator.
struct TestRng {
  std::mt19937_64 g;
  explicit TestRng(std::uint64_t seed) : g(seed) {}
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(g); }
  double sym() { return std::uniform_real_distribution<double>(-1.0, 1.0)(g); }
  long index(long n) { return std::uniform_int_distribution<long>(0, n - 1)(g); }
  std::vector<double> vec(long d) {
    std::vector<double> v(d);
    for (auto& x : v) x = sym();
    return v;
  }
};

}  // namespace rumdlab::oracle
