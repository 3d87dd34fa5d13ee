#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rumdlab/canonical.hpp"
#include "rumdlab/common.hpp"
#include "rumdlab/dyadic.hpp"
#include "rumdlab/martingales.hpp"
#include "rumdlab/operators.hpp"
#include "rumdlab/rademacher.hpp"
#include "rumdlab/rng.hpp"
#include "rumdlab/spaces.hpp"

namespace rumdlab {

// ---------------------------------------------------------------------------
// RUMD_n^q ratio:  (E_{eps,omega} ||sum_1^n eps_k T dM_k(omega)||^q)^(1/q)
//                  / (E_omega ||M_n(omega)||^q)^(1/q)
// over zero-start martingales M.  Exact mode enumerates both eps (halved by
// symmetry) and omega; Monte Carlo samples (omega, eps) pairs.
// ---------------------------------------------------------------------------

enum class RatioMode { automatic, exact, monte_carlo };

struct RumdConfig {
  RatioMode mode = RatioMode::automatic;
  int exact_pair_cap = 16;  // exact when 2n <= this
  long mc_samples = 4000;
  std::uint64_t seed = 1;
};

namespace detail {

// y = T x with the structured kinds short-circuited.
inline void apply_kinded(const DenseOperator& T, std::span<const double> x,
                         std::span<double> y) {
  if (T.kind == OperatorKind::identity) {
    std::copy(x.begin(), x.end(), y.begin());
    return;
  }
  if (T.kind == OperatorKind::summation) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      acc += x[j];
      y[j] = acc;
    }
    return;
  }
  T.apply(x, y);
}

}  // namespace detail

inline double rumd_ratio(const WalshPaleyMartingale& M, const DenseOperator& T,
                         double q, RumdConfig cfg = {},
                         double* stderr_out = nullptr) {
  if (q < 1.0) throw std::invalid_argument("rumd_ratio: q < 1");
  if (!(T.domain == M.space()))
    throw std::invalid_argument("rumd_ratio: operator domain != martingale space");
  if (!M.is_zero_start(1e-12))
    throw std::invalid_argument("rumd_ratio: martingale must start at zero (mean-shift first)");
  const int n = M.n();
  const long N = M.terminal().rows;
  const long dim = M.space().dim;
  const long cod = T.codomain.dim;

  double denom_acc = chunked_sum(N, [&](long b) {
    return detail::pow_q(norm(M.terminal().row_span(b), M.space()), q);
  });
  const double denom = std::pow(denom_acc / static_cast<double>(N), 1.0 / q);
  if (!(denom > 0.0))
    throw std::domain_error("rumd_ratio: ||M_n||_q = 0, ratio undefined");

  const bool exact = cfg.mode == RatioMode::exact ||
                     (cfg.mode == RatioMode::automatic && 2 * n <= cfg.exact_pair_cap);
  if (exact) {
    double num_acc = chunked_sum(
        N,
        [&](long b) {
          std::vector<double> d(dim);
          std::vector<std::vector<double>> images(n, std::vector<double>(cod));
          for (int k = 1; k <= n; ++k) {
            M.difference(k, static_cast<std::uint32_t>(b), d);
            detail::apply_kinded(T, d, images[k - 1]);
          }
          long evals = 0;
          return detail::signed_power_mean_exact(images, T.codomain, q, &evals);
        },
        1);
    if (stderr_out) *stderr_out = 0.0;
    return std::pow(num_acc / static_cast<double>(N), 1.0 / q) / denom;
  }

  CounterRng rng(cfg.seed, fnv1a("rumd_ratio"));
  std::vector<double> d(dim), td(cod), sum(cod);
  double acc = 0.0, acc2 = 0.0;
  for (long s = 0; s < cfg.mc_samples; ++s) {
    const long b = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(N)));
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int k = 1; k <= n; ++k) {
      M.difference(k, static_cast<std::uint32_t>(b), d);
      detail::apply_kinded(T, d, td);
      const double e = rng.next_sign();
      for (long c = 0; c < cod; ++c) sum[c] += e * td[c];
    }
    const double v = detail::pow_q(norm(sum, T.codomain), q);
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / cfg.mc_samples;
  const double var = std::max(0.0, acc2 / cfg.mc_samples - mean * mean);
  const double num = std::pow(mean, 1.0 / q);
  if (stderr_out) {
    const double se_mean = std::sqrt(var / cfg.mc_samples);
    *stderr_out = (mean > 0.0 ? se_mean * num / (q * mean) : se_mean) / denom;
  }
  return num / denom;
}

// ---------------------------------------------------------------------------
// Estimates: certified-interval container with reconstructible witnesses.
// ---------------------------------------------------------------------------

enum class WitnessKind {
  none,
  canonical_m1,                  // mean-shifted M^1 in l1^{2^n}
  canonical_m1_antisymmetrized,  // terminal e_{i(w)} - e_{i(-w)}
  canonical_minf,                // mean-shifted M^infty in linf^{2^n}
  single_difference,             // M_1 = omega_1 x, stored vector x
  random_table,                  // optimized zero-start terminal table
};

struct RumdWitness {
  WitnessKind kind = WitnessKind::none;
  int n = 0;
  LpSpace space;
  std::vector<double> vec;               // single_difference payload
  std::shared_ptr<const Table> table;    // random_table payload
};

inline const char* witness_tag(WitnessKind k) {
  switch (k) {
    case WitnessKind::canonical_m1: return "canonical_m1";
    case WitnessKind::canonical_m1_antisymmetrized: return "canonical_m1_antisymmetrized";
    case WitnessKind::canonical_minf: return "canonical_minf";
    case WitnessKind::single_difference: return "single_difference";
    case WitnessKind::random_table: return "random_search";
    case WitnessKind::none: break;
  }
  return "none";
}

struct RumdEstimate {
  int n = 0;
  double q = 2.0;
  double lower = 0.0;
  double upper = 0.0;
  RumdWitness witness;                // achieves `lower`
  std::vector<std::string> methods;   // every route that contributed
  double lower_stderr = 0.0;          // 0 when the winning route was exact
};

// Rebuild the witness martingale (zero-start) from its descriptor.
inline WalshPaleyMartingale reconstruct_witness(const RumdWitness& w) {
  switch (w.kind) {
    case WitnessKind::canonical_m1:
      return haar_l1(w.n).mean_shifted();
    case WitnessKind::canonical_m1_antisymmetrized:
      return haar_l1_antisymmetrized(w.n);
    case WitnessKind::canonical_minf:
      return summation_image(w.n).mean_shifted();
    case WitnessKind::single_difference: {
      const long N = 1L << w.n;
      if (N * w.space.dim > max_table_doubles)
        throw std::invalid_argument("witness table exceeds storage cap");
      Table t(N, w.space.dim);
      for (long b = 0; b < N; ++b) {
        // omega_1 = +1 on the first half of the rows (bit n-1 clear).
        const double s = (b < N / 2) ? 1.0 : -1.0;
        double* row = t.row(b);
        for (long j = 0; j < w.space.dim; ++j) row[j] = s * w.vec[j];
      }
      return WalshPaleyMartingale(w.space, std::move(t));
    }
    case WitnessKind::random_table:
      return WalshPaleyMartingale(w.space, *w.table);
    case WitnessKind::none: break;
  }
  throw std::invalid_argument("reconstruct_witness: empty witness");
}

// ---------------------------------------------------------------------------
// Upper bounds.
// ---------------------------------------------------------------------------

namespace detail {

struct UpperRoute {
  double value = 0.0;
  const char* method = "trivial_2n";
};

inline UpperRoute rumd_upper_route(const DenseOperator& T, int n, double q) {
  UpperRoute out;
  out.value = 2.0 * n * operator_norm(T).upper;
  if (q == 2.0) {
    double t2 = -1.0;
    if (T.kind == OperatorKind::summation) t2 = 2.0;  // Doob partial-sum bound
    if (T.kind == OperatorKind::identity && T.domain.is_l2()) t2 = 1.0;
    if (t2 > 0.0) {
      const double v = 2.0 * std::sqrt(static_cast<double>(n)) * t2;
      if (v < out.value) {
        out.value = v;
        out.method = "type2_bound";
      }
    }
  }
  return out;
}

}  // namespace detail

// min(2n * ||T||-upper, q=2 only: 2 sqrt(n) * T_2^n-upper) with the analytic
// type-2 inputs sigma_n -> 2 and identity-on-l2 -> 1.
inline double rumd_upper(const DenseOperator& T, int n, double q) {
  check_depth(n);
  if (q < 1.0) throw std::invalid_argument("rumd_upper: q < 1");
  return detail::rumd_upper_route(T, n, q).value;
}

// ---------------------------------------------------------------------------
// Lower bounds.
// ---------------------------------------------------------------------------

enum class LowerStrategy { canonical, random_search, both };

struct LowerConfig {
  LowerStrategy strategy = LowerStrategy::canonical;
  long budget = 200;        // ratio evaluations granted to random search
  std::uint64_t seed = 1;
  RumdConfig ratio;         // mode/caps for generic ratio evaluations
};

namespace detail {

struct Candidate {
  double value = -1.0;
  double stderr_est = 0.0;
  RumdWitness witness;
};

inline void offer(RumdEstimate& est, Candidate c, const char* tag) {
  est.methods.emplace_back(tag);
  if (c.value > est.lower) {
    est.lower = c.value;
    est.lower_stderr = c.stderr_est;
    est.witness = std::move(c.witness);
  }
}

}  // namespace detail

// Best witness ratio found for RUMD_n^q(T).  Canonical witnesses are routed
// through the closed-form block evaluators (exact at every depth); random
// search hill-climbs zero-start terminal tables, re-subtracting the mean
// after every move.  The result is monotone in budget by keep-best.
inline RumdEstimate rumd_lower(const DenseOperator& T, int n, double q,
                               LowerConfig cfg = {}) {
  check_depth(n);
  if (q < 1.0) throw std::invalid_argument("rumd_lower: q < 1");
  const long N = 1L << n;
  const bool want_canonical = cfg.strategy != LowerStrategy::random_search;
  const bool want_random = cfg.strategy != LowerStrategy::canonical;

  RumdEstimate est;
  est.n = n;
  est.q = q;

  // Single-difference baseline: M_1 = omega_1 x gives ratio ||Tx|| / ||x||
  // exactly; with T the identity this is exactly 1, so every identity
  // estimate clears the floor RUMD >= 1. The summation family skips it when
  // its transform route applies: the flat ratio (exactly 1 at every n) would
  // mask the sqrt(n)-growth of the witness the lower series is meant to
  // expose.
  const bool summation_route =
      T.kind == OperatorKind::summation && T.domain.dim == N;
  if (!summation_route) {
    detail::Candidate c;
    std::vector<double> best_x;
    double best_ratio = -1.0;
    std::vector<double> x(T.domain.dim, 0.0);
    for (long j = 0; j < T.domain.dim; ++j) {
      x[j] = 1.0;
      const double r = norm(T.apply(x), T.codomain) / norm(x, T.domain);
      if (r > best_ratio) {
        best_ratio = r;
        best_x = x;
      }
      x[j] = 0.0;
    }
    c.value = best_ratio;
    c.witness.kind = WitnessKind::single_difference;
    c.witness.n = n;
    c.witness.space = T.domain;
    c.witness.vec = std::move(best_x);
    detail::offer(est, std::move(c), "single_difference");
  }

  if (want_canonical) {
    const bool id_l1 = T.kind == OperatorKind::identity && T.domain.is_l1() &&
                       T.domain.dim == N;
    const bool id_linf = T.kind == OperatorKind::identity &&
                         T.domain.is_linf() && T.domain.dim == N;
    const bool sum_n = T.kind == OperatorKind::summation && T.domain.dim == N;

    if (id_l1 || sum_n) {
      // Mean-shifted M^1: per-omega terminal norm is the constant
      // 2(1 - 2^{-n}), so the denominator is q-free.
      detail::Candidate c;
      const double denom = canonical::shifted_haar_terminal_norm(n);
      const double num = id_l1 ? canonical::haar_sign_moment(n, q)
                               : canonical::sigma_sign_moment(n, q);
      c.value = std::pow(num, 1.0 / q) / denom;
      c.witness.kind = WitnessKind::canonical_m1;
      c.witness.n = n;
      c.witness.space = T.domain;
      detail::offer(est, std::move(c), "canonical_m1");
    }
    if (id_l1) {
      // Antisymmetrized variant: E_eps ||sum eps_k dM_k||_1 = n exactly and
      // every terminal value has norm 2.
      detail::Candidate c;
      c.value = std::pow(canonical::anti_sign_moment(n, q), 1.0 / q) / 2.0;
      c.witness.kind = WitnessKind::canonical_m1_antisymmetrized;
      c.witness.n = n;
      c.witness.space = T.domain;
      detail::offer(est, std::move(c), "canonical_m1_antisymmetrized");
    }
    if (id_linf) {
      detail::Candidate c;
      double dacc = 0.0;
      for (long b = 0; b < N; ++b)
        dacc += detail::pow_q(
            canonical::shifted_minf_terminal_norm(n, static_cast<std::uint32_t>(b)), q);
      const double denom = std::pow(dacc / static_cast<double>(N), 1.0 / q);
      c.value = std::pow(canonical::minf_sign_moment(n, q), 1.0 / q) / denom;
      c.witness.kind = WitnessKind::canonical_minf;
      c.witness.n = n;
      c.witness.space = T.domain;
      detail::offer(est, std::move(c), "canonical_minf");
    }
  }

  if (want_random) {
    const long dim = T.domain.dim;
    if (N * dim > max_table_doubles)
      throw std::invalid_argument("rumd_lower: random search table exceeds storage cap");
    CounterRng rng(cfg.seed, fnv1a("rumd_lower"));
    RumdConfig rc = cfg.ratio;
    rc.seed = rng.split(fnv1a("ratio")).next_u64();

    auto zero_mean = [&](Table& t, long col) {
      double mean = 0.0;
      for (long b = 0; b < t.rows; ++b) mean += t.row(b)[col];
      mean /= static_cast<double>(t.rows);
      for (long b = 0; b < t.rows; ++b) t.row(b)[col] -= mean;
    };
    auto evaluate = [&](const Table& t, double* se) {
      WalshPaleyMartingale M(T.domain, t);
      return rumd_ratio(M, T, q, rc, se);
    };

    long spent = 0;
    detail::Candidate best;
    const int starts = 4;
    for (int s = 0; s < starts && spent < cfg.budget; ++s) {
      Table t(N, dim);
      for (long b = 0; b < N; ++b)
        for (long j = 0; j < dim; ++j) t.row(b)[j] = rng.next_gaussian();
      for (long j = 0; j < dim; ++j) zero_mean(t, j);
      double se = 0.0;
      double val = evaluate(t, &se);
      ++spent;
      double step = 1.0;
      while (spent < cfg.budget / starts * (s + 1)) {
        const long b = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(N)));
        const long j = static_cast<long>(rng.next_below(static_cast<std::uint64_t>(dim)));
        const double delta = step * rng.next_gaussian();
        Table cand = t;
        cand.row(b)[j] += delta;
        zero_mean(cand, j);
        double cse = 0.0;
        const double cval = evaluate(cand, &cse);
        ++spent;
        if (cval > val) {
          t = std::move(cand);
          val = cval;
          se = cse;
        } else {
          step = std::max(0.05, step * 0.97);
        }
      }
      if (val > best.value) {
        best.value = val;
        best.stderr_est = se;
        best.witness.kind = WitnessKind::random_table;
        best.witness.n = n;
        best.witness.space = T.domain;
        best.witness.table = std::make_shared<const Table>(std::move(t));
      }
    }
    if (best.value > 0.0) detail::offer(est, std::move(best), "random_search");
  }

  const detail::UpperRoute up = detail::rumd_upper_route(T, n, q);
  est.upper = up.value;
  est.methods.emplace_back(up.method);
  return est;
}

// ---------------------------------------------------------------------------
// Probes and fits.
// ---------------------------------------------------------------------------

struct PqReport {
  double p = 0.0, r = 0.0;
  std::vector<double> per_witness;  // rumd_ratio_p / rumd_ratio_r per witness
  double max_ratio = 0.0;
};

// Per-witness comparison of the p- and r-moment ratios (Kahane-style
// equivalence evidence; non-certifying).  Witnesses: the single-difference
// baseline, the canonical family when T matches one, and random zero-start
// tables to fill the sample.
inline PqReport pq_equivalence_probe(const DenseOperator& T, int n, double p,
                                     double r, int sample, RumdConfig cfg = {}) {
  check_depth(n);
  if (p < 1.0 || r < p) throw std::invalid_argument("pq_equivalence_probe: need 1 <= p <= r");
  const long N = 1L << n;
  PqReport rep;
  rep.p = p;
  rep.r = r;

  auto push = [&](const WalshPaleyMartingale& M) {
    const double vp = rumd_ratio(M, T, p, cfg);
    const double vr = rumd_ratio(M, T, r, cfg);
    rep.per_witness.push_back(vp / vr);
  };

  {
    Table t(N, T.domain.dim);
    for (long b = 0; b < N; ++b) t.row(b)[0] = (b < N / 2) ? 1.0 : -1.0;
    push(WalshPaleyMartingale(T.domain, std::move(t)));
  }
  if (T.kind == OperatorKind::identity && T.domain.is_l1() && T.domain.dim == N)
    push(haar_l1(n).mean_shifted());
  if (T.kind == OperatorKind::summation && T.domain.dim == N)
    push(haar_l1(n).mean_shifted());
  if (T.kind == OperatorKind::identity && T.domain.is_linf() && T.domain.dim == N)
    push(summation_image(n).mean_shifted());

  CounterRng rng(cfg.seed, fnv1a("pq_probe"));
  while (static_cast<int>(rep.per_witness.size()) < sample) {
    Table t(N, T.domain.dim);
    for (long b = 0; b < N; ++b)
      for (long j = 0; j < T.domain.dim; ++j) t.row(b)[j] = rng.next_gaussian();
    for (long j = 0; j < T.domain.dim; ++j) {
      double mean = 0.0;
      for (long b = 0; b < N; ++b) mean += t.row(b)[j];
      mean /= static_cast<double>(N);
      for (long b = 0; b < N; ++b) t.row(b)[j] -= mean;
    }
    push(WalshPaleyMartingale(T.domain, std::move(t)));
  }
  rep.max_ratio = *std::max_element(rep.per_witness.begin(), rep.per_witness.end());
  return rep;
}

struct GrowthFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

// Least-squares fit of log(value) against log(n).
inline GrowthFit growth_exponent(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 3)
    throw std::invalid_argument("growth_exponent: need at least 3 points");
  const double m = static_cast<double>(series.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [n, v] : series) {
    if (!(n > 0.0) || !(v > 0.0))
      throw std::invalid_argument("growth_exponent: nonpositive point");
    const double x = std::log(n), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  GrowthFit fit;
  // det = m^2 Var(x) >= 0; rounding leaves repeated abscissae slightly off
  // zero, so degeneracy is judged relative to the m * sxx scale.
  const double det = m * sxx - sx * sx;
  if (det <= 1e-12 * m * sxx)
    throw std::invalid_argument("growth_exponent: degenerate abscissae");
  fit.slope = (m * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / m;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / m;
  for (const auto& [n, v] : series) {
    const double x = std::log(n), y = std::log(v);
    const double e = y - (fit.slope * x + fit.intercept);
    ss_res += e * e;
    ss_tot += (y - ybar) * (y - ybar);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// q = 1 ratio of the scalar translation witness f = chi_{(1,..,1)} on
// l1(Omega_n).  The translated terminal table is exactly the M^1 terminal
// (f(omega omega') = [omega' = omega]), so beyond the generic-evaluation
// range the closed M^1 routes apply verbatim.
inline double rumd1_scalar_probe(int n) {
  check_depth(n);
  const long N = 1L << n;
  if (n <= 8) {
    BochnerFunction f{LpSpace::l1(N), Table(N, 1)};
    f.table.row(0)[0] = 1.0;  // omega = (1,...,1) packs to bits 0
    WalshPaleyMartingale M = translation_martingale(f).mean_shifted();
    RumdConfig cfg;
    cfg.mode = RatioMode::exact;
    return rumd_ratio(M, identity_operator(LpSpace::l1(N)), 1.0, cfg);
  }
  return canonical::haar_l1_rademacher_mean(n) / canonical::shifted_haar_terminal_norm(n);
}

}  // namespace rumdlab
