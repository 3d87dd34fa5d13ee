#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rumdlab/rng.hpp"
#include "rumdlab/spaces.hpp"

namespace rumdlab {

enum class OperatorKind { generic, identity, summation };

// Dense operator between l_p spaces; matrix is row-major codim x dim.
// `kind` records provenance for the analytic shortcuts (norms, type-2).
struct DenseOperator {
  LpSpace domain;
  LpSpace codomain;
  std::vector<double> a;
  OperatorKind kind = OperatorKind::generic;

  DenseOperator() = default;
  DenseOperator(LpSpace dom, LpSpace cod)
      : domain(dom), codomain(cod), a(static_cast<size_t>(dom.dim) * cod.dim, 0.0) {}

  double& at(long i, long j) { return a[i * domain.dim + j]; }
  double at(long i, long j) const { return a[i * domain.dim + j]; }
  std::span<const double> row(long i) const { return {a.data() + i * domain.dim, static_cast<size_t>(domain.dim)}; }

  void apply(std::span<const double> x, std::span<double> out) const {
    if (static_cast<long>(x.size()) != domain.dim || static_cast<long>(out.size()) != codomain.dim)
      throw std::invalid_argument("operator application dimension mismatch");
    for (long i = 0; i < codomain.dim; ++i) {
      double s = 0.0;
      const double* r = a.data() + i * domain.dim;
      for (long j = 0; j < domain.dim; ++j) s += r[j] * x[j];
      out[i] = s;
    }
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(codomain.dim);
    apply(x, out);
    return out;
  }
};

inline DenseOperator identity_operator(const LpSpace& S) {
  DenseOperator T(S, S);
  for (long i = 0; i < S.dim; ++i) T.at(i, i) = 1.0;
  T.kind = OperatorKind::identity;
  return T;
}

// sigma_N : l_1^N -> l_inf^N, (xi_k) -> (sum_{l<=k} xi_l); lower-triangular ones.
inline DenseOperator summation_operator(long N) {
  if (N < 1) throw std::invalid_argument("summation operator needs N >= 1");
  DenseOperator T(LpSpace::l1(N), LpSpace::linf(N));
  for (long i = 0; i < N; ++i)
    for (long j = 0; j <= i; ++j) T.at(i, j) = 1.0;
  T.kind = OperatorKind::summation;
  return T;
}

// T' : codomain' -> domain', matrix transpose; <Tx, b> = <x, T'b> exactly.
inline DenseOperator adjoint(const DenseOperator& T) {
  DenseOperator A(dual(T.codomain), dual(T.domain));
  for (long i = 0; i < T.codomain.dim; ++i)
    for (long j = 0; j < T.domain.dim; ++j) A.at(j, i) = T.at(i, j);
  if (T.kind == OperatorKind::identity) A.kind = OperatorKind::identity;
  return A;
}

struct NormBound {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
};

inline double spectral_norm(const DenseOperator& T) {
  using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const Mat> A(T.a.data(), T.codomain.dim, T.domain.dim);
  Eigen::MatrixXd G = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  double lmax = es.eigenvalues().maxCoeff();
  return lmax > 0.0 ? std::sqrt(lmax) : 0.0;
}

// ||id: l_p^d -> l_q^d|| = d^{(1/q - 1/p)+}
inline double embedding_constant(double p, double q, long d) {
  double ip = p == p_infinity ? 0.0 : 1.0 / p;
  double iq = q == p_infinity ? 0.0 : 1.0 / q;
  double e = iq - ip;
  return e > 0.0 ? std::pow(static_cast<double>(d), e) : 1.0;
}

// Exact closed forms where available:
//   l_1 -> Y            max column norm
//   X -> l_inf          max row dual-norm
//   l_2 -> l_2          largest singular value
//   l_inf^d -> Y        extreme-point enumeration (2^d <= 2^20)
//   X -> l_1^m          ||T'|| over sign patterns (2^m <= 2^20)
// otherwise [random-search lower, factorization upper].
inline NormBound operator_norm(const DenseOperator& T, std::uint64_t seed = 1, long budget = 4000) {
  const LpSpace& X = T.domain;
  const LpSpace& Y = T.codomain;

  if (X.is_l1()) {
    double best = 0.0;
    std::vector<double> col(Y.dim);
    for (long j = 0; j < X.dim; ++j) {
      for (long i = 0; i < Y.dim; ++i) col[i] = T.at(i, j);
      best = std::max(best, norm(col, Y));
    }
    return {best, best, true};
  }
  if (Y.is_linf()) {
    double best = 0.0;
    for (long i = 0; i < Y.dim; ++i) best = std::max(best, dual_norm(T.row(i), X));
    return {best, best, true};
  }
  if (X.is_l2() && Y.is_l2()) {
    double s = spectral_norm(T);
    return {s, s, true};
  }
  if (X.is_linf() && X.dim <= 20) {
    double best = 0.0;
    std::vector<double> x(X.dim), out(Y.dim);
    for (long m = 0; m < (1L << X.dim); ++m) {
      for (long j = 0; j < X.dim; ++j) x[j] = (m >> j) & 1 ? -1.0 : 1.0;
      T.apply(x, out);
      best = std::max(best, norm(out, Y));
    }
    return {best, best, true};
  }
  if (Y.is_l1() && Y.dim <= 20) {
    // sup_x ||Tx||_1 = max over sign patterns s of ||T's||_{X'}
    double best = 0.0;
    std::vector<double> s(Y.dim), ts(X.dim);
    for (long m = 0; m < (1L << Y.dim); ++m) {
      for (long i = 0; i < Y.dim; ++i) s[i] = (m >> i) & 1 ? -1.0 : 1.0;
      for (long j = 0; j < X.dim; ++j) {
        double acc = 0.0;
        for (long i = 0; i < Y.dim; ++i) acc += T.at(i, j) * s[i];
        ts[j] = acc;
      }
      best = std::max(best, dual_norm(ts, X));
    }
    return {best, best, true};
  }

  // interval fallback
  double upper = embedding_constant(X.p, 2.0, X.dim) * spectral_norm(T) *
                 embedding_constant(2.0, Y.p, Y.dim);
  CounterRng rng(seed, fnv1a("operator_norm"));
  double lower = 0.0;
  std::vector<double> x(X.dim), out(Y.dim), bestx(X.dim);
  for (long it = 0; it < budget; ++it) {
    for (long j = 0; j < X.dim; ++j) x[j] = rng.next_gaussian();
    double nx = norm(x, X);
    if (nx < 1e-300) continue;
    for (auto& c : x) c /= nx;
    T.apply(x, out);
    double v = norm(out, Y);
    if (v > lower) {
      lower = v;
      bestx = x;
    }
  }
  // local polish around the best direction
  double step = 0.25;
  for (int round = 0; round < 8; ++round) {
    bool improved = false;
    for (long j = 0; j < X.dim; ++j) {
      for (double sgn : {1.0, -1.0}) {
        x = bestx;
        x[j] += sgn * step;
        double nx = norm(x, X);
        if (nx < 1e-300) continue;
        for (auto& c : x) c /= nx;
        T.apply(x, out);
        double v = norm(out, Y);
        if (v > lower) {
          lower = v;
          bestx = x;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  lower = std::min(lower, upper);
  return {lower, upper, false};
}

// Finite point measure on [0,1]; the discrete class Lemma 4.5's proof
// reduces Phi to.
struct PointMeasure {
  std::vector<std::pair<double, double>> atoms;  // (t, weight)

  PointMeasure() = default;
  explicit PointMeasure(std::vector<std::pair<double, double>> a) : atoms(std::move(a)) {
    for (auto& [t, lam] : atoms)
      if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("atom position outside [0,1]");
  }
};

// atoms sorted by t with equal-t groups summed
inline PointMeasure merged(const PointMeasure& mu) {
  PointMeasure out;
  auto atoms = mu.atoms;
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [t, lam] : atoms) {
    if (!out.atoms.empty() && out.atoms.back().first == t)
      out.atoms.back().second += lam;
    else
      out.atoms.emplace_back(t, lam);
  }
  return out;
}

inline double total_variation(const PointMeasure& mu) {
  double s = 0.0;
  for (const auto& [t, lam] : merged(mu).atoms) s += std::fabs(lam);
  return s;
}

inline PointMeasure measure_sum(const PointMeasure& a, const PointMeasure& b) {
  PointMeasure out = a;
  out.atoms.insert(out.atoms.end(), b.atoms.begin(), b.atoms.end());
  return merged(out);
}

inline PointMeasure measure_scale(const PointMeasure& a, double c) {
  PointMeasure out = a;
  for (auto& [t, lam] : out.atoms) lam *= c;
  return out;
}

// Phi(mu)(t) = mu([0, t]): a step function with jumps at the atom positions.
struct StepSummary {
  std::vector<double> breakpoints;
  std::vector<double> partial_sums;  // value of Phi(mu) on [breakpoint_i, next)
  double sup_norm = 0.0;
};

inline StepSummary phi_apply(const PointMeasure& mu) {
  StepSummary s;
  double run = 0.0;
  for (const auto& [t, lam] : merged(mu).atoms) {
    run += lam;
    s.breakpoints.push_back(t);
    s.partial_sums.push_back(run);
    s.sup_norm = std::max(s.sup_norm, std::fabs(run));
  }
  return s;
}

}  // namespace rumdlab
