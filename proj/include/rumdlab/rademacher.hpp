#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rumdlab/common.hpp"
#include "rumdlab/operators.hpp"
#include "rumdlab/rng.hpp"
#include "rumdlab/spaces.hpp"

namespace rumdlab {

// ---------------------------------------------------------------------------
// Rademacher averages  (E_eps || sum_k eps_k x_k ||^q)^(1/q).
// ---------------------------------------------------------------------------

enum class AverageMode { automatic, exact, monte_carlo };

struct RademacherConfig {
  AverageMode mode = AverageMode::automatic;
  int exact_cap = 20;        // enumerate 2^(k-1) sign patterns up to this k
  long samples = 200000;     // Monte Carlo sample count
  std::uint64_t seed = 1;
};

struct RademacherAverage {
  double value = 0.0;
  bool exact = false;
  long evaluations = 0;      // norm evaluations spent
  long samples = 0;          // Monte Carlo sample count (0 when exact)
  std::uint64_t seed = 0;    // generator seed (0 when exact)
  double stderr_est = 0.0;   // delta-method standard error (0 when exact)
};

namespace detail {

inline double pow_q(double v, double q) {
  if (q == 1.0) return v;
  if (q == 2.0) return v * v;
  if (q == 3.0) return v * v * v;
  return std::pow(v, q);
}

// Mean of norm(sum eps_k x_k)^q over all sign patterns, enumerated in Gray
// order with one vector flip per step.  eps_1 is pinned to +1: the summand is
// invariant under global sign flip, so the half enumeration is exact.
inline double signed_power_mean_exact(const std::vector<std::vector<double>>& xs,
                                      const LpSpace& S, double q,
                                      long* evals) {
  const int k = static_cast<int>(xs.size());
  if (k > 62)
    throw std::invalid_argument("signed_power_mean_exact: k > 62");
  const int m = S.dim;
  std::vector<double> sum(m, 0.0);
  for (const auto& x : xs)
    for (int j = 0; j < m; ++j) sum[j] += x[j];
  std::vector<int> eps(k, 1);
  const std::uint64_t states = (k <= 1) ? 1 : (1ULL << (k - 1));
  double acc = 0.0;
  for (std::uint64_t t = 0;; ++t) {
    acc += pow_q(norm(sum, S), q);
    ++*evals;
    if (t + 1 == states) break;
    // Gray step: flip eps_{j+1} where j indexes the low set bit of t+1.
    const int j = 1 + static_cast<int>(__builtin_ctzll(t + 1));
    const double d = -2.0 * eps[j];
    eps[j] = -eps[j];
    const auto& x = xs[j];
    for (int c = 0; c < m; ++c) sum[c] += d * x[c];
  }
  return acc / static_cast<double>(states);
}

}  // namespace detail

inline RademacherAverage rademacher_average(
    const std::vector<std::vector<double>>& xs, const LpSpace& S, double q,
    RademacherConfig cfg = {}) {
  if (q < 1.0) throw std::invalid_argument("rademacher_average: q < 1");
  const int k = static_cast<int>(xs.size());
  for (const auto& x : xs)
    if (static_cast<int>(x.size()) != S.dim)
      throw std::invalid_argument("rademacher_average: dimension mismatch");
  RademacherAverage out;
  if (k == 0) { out.exact = true; return out; }

  if (cfg.mode == AverageMode::exact && k > cfg.exact_cap)
    throw std::invalid_argument(
        "rademacher_average: exact mode capped at " +
        std::to_string(cfg.exact_cap) + " signs; use monte_carlo");
  const bool go_exact =
      cfg.mode == AverageMode::exact ||
      (cfg.mode == AverageMode::automatic && k <= cfg.exact_cap);
  if (go_exact) {
    out.value = std::pow(
        detail::signed_power_mean_exact(xs, S, q, &out.evaluations), 1.0 / q);
    out.exact = true;
    return out;
  }

  out.samples = cfg.samples;
  out.seed = cfg.seed;
  CounterRng rng(cfg.seed, fnv1a("rademacher_average"));
  const int m = S.dim;
  std::vector<double> sum(m);
  double acc = 0.0, acc2 = 0.0;
  for (long s = 0; s < cfg.samples; ++s) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int j = 0; j < k; ++j) {
      const double e = rng.next_sign();
      const auto& x = xs[j];
      for (int c = 0; c < m; ++c) sum[c] += e * x[c];
    }
    const double v = detail::pow_q(norm(sum, S), q);
    acc += v;
    acc2 += v * v;
    ++out.evaluations;
  }
  const double nmean = acc / cfg.samples;
  const double var = std::max(0.0, acc2 / cfg.samples - nmean * nmean);
  const double se_mean = std::sqrt(var / cfg.samples);
  out.value = std::pow(nmean, 1.0 / q);
  // Delta method through v = m^(1/q).
  out.stderr_est =
      (nmean > 0.0) ? se_mean * out.value / (q * nmean) : se_mean;
  return out;
}

// Exact q = 1 average in l1^m: the norm splits per coordinate, so
// E|sum_k eps_k x_k[j]| is enumerated over the nonzero entries of coordinate j
// only.  Cost sum_j 2^(k'_j - 1) instead of 2^(k-1) norm evaluations.
inline double rademacher_average_l1_exact(
    const std::vector<std::vector<double>>& xs, int dim) {
  const int k = static_cast<int>(xs.size());
  for (const auto& x : xs)
    if (static_cast<int>(x.size()) != dim)
      throw std::invalid_argument("rademacher_average_l1_exact: dim mismatch");
  double total = 0.0;
  std::vector<double> c;
  for (int j = 0; j < dim; ++j) {
    c.clear();
    for (int i = 0; i < k; ++i)
      if (xs[i][j] != 0.0) c.push_back(xs[i][j]);
    if (c.empty()) continue;
    const int r = static_cast<int>(c.size());
    if (r > 30)
      throw std::invalid_argument(
          "rademacher_average_l1_exact: coordinate support too large");
    const std::uint64_t states = (r == 1) ? 1 : (1ULL << (r - 1));
    double coord = 0.0;
    for (std::uint64_t t = 0; t < states; ++t) {
      double s = c[0];  // sign of the first entry pinned by symmetry
      for (int i = 1; i < r; ++i)
        s += ((t >> (i - 1)) & 1ULL) ? -c[i] : c[i];
      coord += std::fabs(s);
    }
    total += coord / static_cast<double>(states);
  }
  return total;
}

// Kahane-style moment comparison: value = A_r / A_p with
// A_t = (E || sum eps_k x_k ||^t)^(1/t).  For r >= p this is >= 1.  Monte
// Carlo evaluations share one sample stream so the ratio noise stays small.
inline double kahane_ratio(const std::vector<std::vector<double>>& xs,
                           const LpSpace& S, double p, double r,
                           RademacherConfig cfg = {}) {
  if (p < 1.0 || r < 1.0) throw std::invalid_argument("kahane_ratio: moments < 1");
  const int k = static_cast<int>(xs.size());
  if (k == 0) return 1.0;
  const bool go_exact =
      cfg.mode == AverageMode::exact ||
      (cfg.mode == AverageMode::automatic && k <= cfg.exact_cap);
  if (go_exact) {
    long evals = 0;
    const double mp = detail::signed_power_mean_exact(xs, S, p, &evals);
    if (mp == 0.0) return 1.0;  // all-zero family: degenerate ratio pinned to 1
    const double mr = detail::signed_power_mean_exact(xs, S, r, &evals);
    return std::pow(mr, 1.0 / r) / std::pow(mp, 1.0 / p);
  }
  CounterRng rng(cfg.seed, fnv1a("kahane_ratio"));
  const int m = S.dim;
  std::vector<double> sum(m);
  double accp = 0.0, accr = 0.0;
  for (long s = 0; s < cfg.samples; ++s) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int j = 0; j < k; ++j) {
      const double e = rng.next_sign();
      const auto& x = xs[j];
      for (int c = 0; c < m; ++c) sum[c] += e * x[c];
    }
    const double v = norm(sum, S);
    accp += detail::pow_q(v, p);
    accr += detail::pow_q(v, r);
  }
  if (accp == 0.0) return 1.0;
  return std::pow(accr / cfg.samples, 1.0 / r) /
         std::pow(accp / cfg.samples, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Type-p constants restricted to n vectors.
// ---------------------------------------------------------------------------

struct TypeEstimate {
  double p = 2.0;
  int n = 1;
  double lower = 0.0;   // certified by the stored witness family
  double upper = 0.0;   // analytic bound
  std::vector<std::vector<double>> witness;
};

namespace detail {

// Ratio (E_eps || sum eps_k T x_k ||_Y^2)^(1/2) / (sum_k ||x_k||_X^p)^(1/p),
// evaluated exactly over sign patterns.  images[k] = T x_k is kept in sync by
// the caller.
inline double type_ratio(const DenseOperator& T, double p,
                         const std::vector<std::vector<double>>& xs,
                         const std::vector<std::vector<double>>& images,
                         long* evals) {
  double denom = 0.0;
  for (const auto& x : xs) denom += pow_q(norm(x, T.domain), p);
  denom = std::pow(denom, 1.0 / p);
  if (denom < 1e-300) return 0.0;
  const double num =
      std::sqrt(signed_power_mean_exact(images, T.codomain, 2.0, evals));
  return num / denom;
}

}  // namespace detail

// Lower bound for the n-vector type-p constant of T, i.e. the best C in
//   (E || sum_1^n eps_k T x_k ||^2)^(1/2) <= C (sum ||x_k||_X^p)^(1/p),
// found by coordinate hill-climbing from unit-vector and Gaussian starts.
// budget counts norm evaluations.  upper = ||T|| n^(1-1/p) (triangle
// inequality), refined to the summation operator's bound 2 when p = 2.
inline TypeEstimate type_constant_lower(const DenseOperator& T, double p,
                                        int n, long budget = 2000000,
                                        std::uint64_t seed = 1) {
  if (p < 1.0 || p > 2.0)
    throw std::invalid_argument("type_constant_lower: p outside [1,2]");
  if (n < 1 || n > 20) throw std::invalid_argument("type_constant_lower: n");
  const int dim = T.domain.dim;
  const int cod = T.codomain.dim;
  CounterRng rng(seed, fnv1a("type_constant_lower"));
  long evals = 0;

  auto image = [&](const std::vector<double>& x) { return T.apply(x); };

  TypeEstimate best;
  best.p = p;
  best.n = n;

  auto consider = [&](std::vector<std::vector<double>> xs) {
    std::vector<std::vector<double>> images(n);
    for (int k = 0; k < n; ++k) images[k] = image(xs[k]);
    double val = detail::type_ratio(T, p, xs, images, &evals);
    // Coordinate polish with a shrinking step.
    double step = 0.5;
    for (int round = 0; round < 10 && evals < budget; ++round) {
      bool improved = false;
      for (int k = 0; k < n && evals < budget; ++k) {
        for (int j = 0; j < dim && evals < budget; ++j) {
          for (const double d : {step, -step}) {
            xs[k][j] += d;
            for (int c = 0; c < cod; ++c) images[k][c] += d * T.at(c, j);
            const double cand = detail::type_ratio(T, p, xs, images, &evals);
            if (cand > val * (1.0 + 1e-12)) {
              val = cand;
              improved = true;
            } else {
              xs[k][j] -= d;
              for (int c = 0; c < cod; ++c) images[k][c] -= d * T.at(c, j);
            }
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    if (val > best.lower) {
      best.lower = val;
      best.witness = xs;
    }
  };

  // Start 1: distinct unit vectors (cycled when n > dim).
  {
    std::vector<std::vector<double>> xs(n, std::vector<double>(dim, 0.0));
    for (int k = 0; k < n; ++k) xs[k][k % dim] = 1.0;
    consider(std::move(xs));
  }
  // Start 2+: Gaussian families.
  for (int s = 0; s < 3 && evals < budget; ++s) {
    std::vector<std::vector<double>> xs(n, std::vector<double>(dim));
    for (auto& x : xs)
      for (auto& v : x) v = rng.next_gaussian();
    consider(std::move(xs));
  }

  // The objective is homogeneous of degree zero; present the witness on the
  // unit sphere sum ||x_k||^p = 1.
  if (!best.witness.empty()) {
    double s = 0.0;
    for (const auto& x : best.witness)
      s += detail::pow_q(norm(x, T.domain), p);
    if (s > 0.0) {
      const double scale = std::pow(s, -1.0 / p);
      for (auto& x : best.witness)
        for (auto& v : x) v *= scale;
    }
  }

  const double tnorm = operator_norm(T).upper;
  best.upper = tnorm * std::pow(static_cast<double>(n), 1.0 - 1.0 / p);
  if (p == 2.0 && T.kind == OperatorKind::summation)
    best.upper = std::min(best.upper, 2.0);  // Doob L2 maximal bound
  if (p == 2.0 && T.kind == OperatorKind::identity && T.domain.is_l2())
    best.upper = std::min(best.upper, 1.0);  // orthogonality
  return best;
}

// ---------------------------------------------------------------------------
// 2-summing norm bounds for u : l2^d -> Y.
// ---------------------------------------------------------------------------

struct Pi2Estimate {
  double lower = 0.0;  // from the witness orthonormal system below
  double upper = 0.0;  // Pietsch factorization certificate
  std::vector<std::vector<double>> witness_orthonormal_system;
  std::vector<double> pietsch_matrix;  // row-major d x d, PSD, trace 1
};

namespace detail {

// Upper bound ||u W^(-1/2)||_{l2 -> Y} for W = C C^T / tr(C C^T).  Any PSD
// trace-one W yields a valid pi_2 upper bound.  Eigenvalues are floored at
// 1e-12 before inversion so singular iterates stay finite.
inline double pietsch_value(const DenseOperator& u,
                            const Eigen::MatrixXd& C,
                            Eigen::MatrixXd* w_out = nullptr) {
  const int d = u.domain.dim;
  Eigen::MatrixXd W = C * C.transpose();
  const double tr = W.trace();
  if (!(tr > 0.0)) return std::numeric_limits<double>::infinity();
  W /= tr;
  if (w_out) *w_out = W;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
  Eigen::VectorXd lam = es.eigenvalues();
  for (int i = 0; i < d; ++i) lam[i] = std::max(lam[i], 1e-12);
  Eigen::MatrixXd winv_half =
      es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      A(u.a.data(), u.codomain.dim, d);
  Eigen::MatrixXd M = A * winv_half;
  DenseOperator comp;
  comp.domain = u.domain;
  comp.codomain = u.codomain;
  // Eigen stores column-major; DenseOperator wants row-major.
  comp.a.resize(static_cast<std::size_t>(M.rows()) * M.cols());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j)
      comp.a[static_cast<std::size_t>(i) * M.cols() + j] = M(i, j);
  return operator_norm(comp).upper;
}

}  // namespace detail

// pi_2(u) bounds for u : l2^d -> Y.
//   lower: max of (sum_i ||u x_i||^2)^(1/2) over sampled orthonormal bases
//          (valid since the Pietsch domination must hold on each system);
//   upper: min over PSD trace-one W of ||u W^(-1/2)||, minimized by numeric
//          gradient descent on the factor C (W = CC^T/tr), started from the
//          identity, from W ~ u^T u (exact for Hilbert codomains), and from
//          random factors.
inline Pi2Estimate pi2_bounds(const DenseOperator& u, int restarts = 3,
                              int iterations = 40, std::uint64_t seed = 1) {
  if (!u.domain.is_l2())
    throw std::invalid_argument("pi2_bounds: domain must be l2");
  const int d = u.domain.dim;
  const int cod = u.codomain.dim;
  CounterRng rng(seed, fnv1a("pi2_bounds"));
  Pi2Estimate out;

  // Lower bound: identity basis plus random orthonormal systems.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      A(u.a.data(), cod, d);
  std::vector<double> col(cod);
  auto system_value = [&](const Eigen::MatrixXd& Q) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
      Eigen::VectorXd y = A * Q.col(i);
      std::copy(y.data(), y.data() + cod, col.begin());
      const double nv = norm(col, u.codomain);
      s += nv * nv;
    }
    return std::sqrt(s);
  };
  Eigen::MatrixXd best_Q = Eigen::MatrixXd::Identity(d, d);
  out.lower = system_value(best_Q);
  for (int s = 0; s < 8; ++s) {
    Eigen::MatrixXd G(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) G(i, j) = rng.next_gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
    const double v = system_value(Q);
    if (v > out.lower) { out.lower = v; best_Q = Q; }
  }
  out.witness_orthonormal_system.assign(d, std::vector<double>(d));
  for (int i = 0; i < d; ++i)
    for (int r = 0; r < d; ++r)
      out.witness_orthonormal_system[i][r] = best_Q(r, i);

  // Upper bound: descent on the Pietsch factor.
  Eigen::MatrixXd best_W = Eigen::MatrixXd::Identity(d, d) / d;
  double best = std::numeric_limits<double>::infinity();
  auto run_descent = [&](Eigen::MatrixXd C) {
    Eigen::MatrixXd W;
    double val = detail::pietsch_value(u, C, &W);
    if (val < best) { best = val; best_W = W; }
    double h = 0.05;
    for (int it = 0; it < iterations; ++it) {
      Eigen::MatrixXd grad(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          Eigen::MatrixXd Cp = C, Cm = C;
          Cp(i, j) += h;
          Cm(i, j) -= h;
          grad(i, j) =
              (detail::pietsch_value(u, Cp) - detail::pietsch_value(u, Cm)) /
              (2 * h);
        }
      const double gn = grad.norm();
      if (gn < 1e-12) break;
      double step = 0.5;
      bool moved = false;
      for (int ls = 0; ls < 8; ++ls, step *= 0.5) {
        Eigen::MatrixXd Cn = C - (step / gn) * grad;
        Eigen::MatrixXd W2;
        const double cand = detail::pietsch_value(u, Cn, &W2);
        if (cand < val - 1e-14) {
          C = Cn;
          val = cand;
          if (val < best) { best = val; best_W = W2; }
          moved = true;
          break;
        }
      }
      if (!moved) h *= 0.5;
      if (h < 1e-8) break;
    }
  };

  run_descent(Eigen::MatrixXd::Identity(d, d));
  {
    // Smart start: W proportional to u^T u (optimal when Y is Hilbert).
    Eigen::MatrixXd G = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(1e-12);
    run_descent(es.eigenvectors() * lam.cwiseSqrt().asDiagonal());
  }
  for (int s = 0; s + 2 < restarts; ++s) {
    Eigen::MatrixXd C(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) C(i, j) = rng.next_gaussian();
    run_descent(C);
  }

  out.upper = best;
  best_W /= best_W.trace();  // re-normalize away accumulated roundoff
  out.pietsch_matrix.resize(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      out.pietsch_matrix[static_cast<std::size_t>(i) * d + j] = best_W(i, j);
  // Guard against numeric dust: the certificate can never dip below a
  // genuinely certified lower bound by more than roundoff.
  if (out.upper < out.lower) out.upper = std::max(out.upper, out.lower);
  return out;
}

}  // namespace rumdlab
