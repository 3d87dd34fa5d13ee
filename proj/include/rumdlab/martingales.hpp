#pragma once

#include <cmath>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "rumdlab/dyadic.hpp"
#include "rumdlab/operators.hpp"
#include "rumdlab/spaces.hpp"

namespace rumdlab {

// Dense tables beyond this many doubles would dwarf the machine; the
// canonical block evaluators (canonical.hpp) cover larger depths exactly.
inline constexpr long max_table_doubles = 1L << 25;

// Walsh-Paley martingale M_k = E(M_n | F_k) against the coordinate
// filtration, stored by its terminal table; level tables are cached
// compactly (2^k rows at level k) on first use.
class WalshPaleyMartingale {
 public:
  WalshPaleyMartingale(LpSpace space, Table terminal)
      : space_(space), terminal_(std::move(terminal)) {
    n_ = depth_of_rows(terminal_.rows);
    if (terminal_.dim != space_.dim)
      throw std::invalid_argument("terminal table dimension does not match space");
    if (terminal_.rows * terminal_.dim > max_table_doubles)
      throw std::invalid_argument("terminal table exceeds dense-storage cap; use the block evaluators");
  }

  int n() const { return n_; }
  const LpSpace& space() const { return space_; }
  const Table& terminal() const { return terminal_; }

  // M_k(omega)
  std::span<const double> level_value(int k, std::uint32_t bits) const {
    check_level(k);
    ensure_levels();
    return levels_[k].row_span(k == 0 ? 0 : bits >> (n_ - k));
  }
  std::span<const double> level_value(int k, const DyadicPoint& w) const {
    check_point(w);
    return level_value(k, w.bits);
  }

  // full 2^n-row table of M_k
  Table level(int k) const {
    check_level(k);
    return conditional_expectation(terminal_, k);
  }

  // dM_k(omega); dM_0 = M_0
  void difference(int k, std::uint32_t bits, std::span<double> out) const {
    check_level(k);
    ensure_levels();
    if (static_cast<long>(out.size()) != terminal_.dim)
      throw std::invalid_argument("difference output dimension mismatch");
    if (k == 0) {
      auto m0 = levels_[0].row_span(0);
      std::copy(m0.begin(), m0.end(), out.begin());
      return;
    }
    auto cur = levels_[k].row_span(bits >> (n_ - k));
    auto prev = levels_[k - 1].row_span(bits >> (n_ - k + 1));
    for (long j = 0; j < terminal_.dim; ++j) out[j] = cur[j] - prev[j];
  }
  std::vector<double> difference(int k, const DyadicPoint& w) const {
    check_point(w);
    std::vector<double> out(terminal_.dim);
    difference(k, w.bits, out);
    return out;
  }

  double level_norm(int k, std::uint32_t bits) const { return norm(level_value(k, bits), space_); }
  double difference_norm(int k, std::uint32_t bits) const {
    std::vector<double> d(terminal_.dim);
    difference(k, bits, d);
    return norm(d, space_);
  }

  bool is_zero_start(double tol = 0.0) const {
    ensure_levels();
    auto m0 = levels_[0].row_span(0);
    for (double x : m0)
      if (std::fabs(x) > tol) return false;
    return true;
  }

  // M - M_0: the mean shift; leaves dM_k for k >= 1 unchanged.
  WalshPaleyMartingale mean_shifted() const {
    ensure_levels();
    auto m0 = levels_[0].row_span(0);
    Table t = terminal_;
    for (long r = 0; r < t.rows; ++r) {
      double* row = t.row(r);
      for (long j = 0; j < t.dim; ++j) row[j] -= m0[j];
    }
    return WalshPaleyMartingale(space_, std::move(t));
  }

 private:
  void check_level(int k) const {
    if (k < 0 || k > n_) throw std::invalid_argument("martingale level out of [0, n]");
  }
  void check_point(const DyadicPoint& w) const {
    if (w.n != n_) throw std::invalid_argument("point depth does not match martingale");
  }
  void ensure_levels() const {
    std::call_once(built_, [this] {
      levels_.resize(n_ + 1);
      levels_[n_] = terminal_;
      for (int k = n_; k >= 1; --k) {
        const Table& fine = levels_[k];
        Table coarse(fine.rows / 2, fine.dim);
        for (long p = 0; p < coarse.rows; ++p) {
          const double* a = fine.row(2 * p);
          const double* b = fine.row(2 * p + 1);
          double* dst = coarse.row(p);
          for (long j = 0; j < fine.dim; ++j) dst[j] = 0.5 * (a[j] + b[j]);
        }
        levels_[k - 1] = std::move(coarse);
      }
    });
  }

  LpSpace space_;
  int n_;
  Table terminal_;
  mutable std::vector<Table> levels_;
  mutable std::once_flag built_;
};

// M^1 in l_1^{2^n}: terminal omega -> e_{i(omega)}; M_k^1(omega) =
// 2^{k-n} chi_{I(omega_{<=k})}, all level and difference norms 1.
inline WalshPaleyMartingale haar_l1(int n) {
  check_depth(n);
  long N = 1L << n;
  if (N * N > max_table_doubles)
    throw std::invalid_argument("haar_l1 dense table exceeds storage cap");
  Table t(N, N);
  for (long b = 0; b < N; ++b) t.row(b)[b] = 1.0;
  return WalshPaleyMartingale(LpSpace::l1(N), std::move(t));
}

// Zero-start variant: terminal omega -> e_{i(omega)} - e_{i(-omega)}.
// All differences have norm 2 and E_eps ||sum eps_k dM_k(omega)||_1 = n.
inline WalshPaleyMartingale haar_l1_antisymmetrized(int n) {
  check_depth(n);
  long N = 1L << n;
  if (N * N > max_table_doubles)
    throw std::invalid_argument("antisymmetrized haar table exceeds storage cap");
  Table t(N, N);
  for (long b = 0; b < N; ++b) {
    t.row(b)[b] = 1.0;
    t.row(b)[N - 1 - b] -= 1.0;
  }
  return WalshPaleyMartingale(LpSpace::l1(N), std::move(t));
}

// M^infty = sigma_n . M^1 levelwise, realized directly by its terminal
// sigma_n e_{i(omega)} (a 0/1 step vector) in l_inf^{2^n}.
inline WalshPaleyMartingale summation_image(int n) {
  check_depth(n);
  long N = 1L << n;
  if (N * N > max_table_doubles)
    throw std::invalid_argument("summation_image dense table exceeds storage cap");
  Table t(N, N);
  for (long b = 0; b < N; ++b) {
    double* row = t.row(b);
    for (long j = b; j < N; ++j) row[j] = 1.0;
  }
  return WalshPaleyMartingale(LpSpace::linf(N), std::move(t));
}

// Closed form for dM_k^infty(omega): omega_k 2^{k-n-1} times the tent
// profile (1..L on I(omega_{<k}, +1), L-1..0 on I(omega_{<k}, -1)),
// L = 2^{n-k}. All values are dyadic rationals, exact in doubles.
inline std::vector<double> difference_formula_minf(int n, int k, const DyadicPoint& w) {
  check_depth(n);
  if (w.n != n) throw std::invalid_argument("point depth mismatch");
  if (k < 1 || k > n) throw std::invalid_argument("difference level out of [1, n]");
  long N = 1L << n;
  long L = 1L << (n - k);
  long parent_start = static_cast<long>(w.prefix_bits(k - 1)) << (n - k + 1);
  double scale = w.sign(k) * std::ldexp(1.0, k - n - 1);
  std::vector<double> v(N, 0.0);
  for (long j = 0; j < L; ++j) v[parent_start + j] = scale * static_cast<double>(j + 1);
  for (long j = 0; j < L; ++j) v[parent_start + L + j] = scale * static_cast<double>(L - 1 - j);
  return v;
}

// Translation martingale of a scalar f on Omega_n carrying the l_p(Omega_n)
// counting norm: terminal(omega) = [f(omega omega')]_{omega'}, the group
// product omega omega' being XOR of the packed bits.
inline WalshPaleyMartingale translation_martingale(const BochnerFunction& f) {
  if (f.table.dim != 1)
    throw std::invalid_argument("translation martingale needs a scalar function on Omega_n");
  long N = f.table.rows;
  if (f.space.dim != N)
    throw std::invalid_argument("norm tag dimension must equal |Omega_n|");
  if (N * N > max_table_doubles)
    throw std::invalid_argument("translation table exceeds storage cap");
  Table t(N, N);
  for (long b = 0; b < N; ++b) {
    double* row = t.row(b);
    for (long bp = 0; bp < N; ++bp) row[bp] = f.table.row(b ^ bp)[0];
  }
  return WalshPaleyMartingale(f.space, std::move(t));
}

// phi(M) = sum_{k=1}^n T_k dM_k; dM_0 is never transformed.
struct MartingaleTransform {
  std::vector<DenseOperator> ops;  // T_1..T_n

  void validate(const LpSpace& domain, int n) const {
    if (static_cast<int>(ops.size()) != n)
      throw std::invalid_argument("transform needs exactly n operators");
    for (const auto& T : ops) {
      if (!(T.domain == domain)) throw std::invalid_argument("transform domain mismatch");
      if (!(T.codomain == ops.front().codomain))
        throw std::invalid_argument("transform codomains must agree");
    }
  }
};

// T_k = eps_k Id, the Rademacher transform
inline MartingaleTransform sign_transform(const LpSpace& S, const std::vector<int>& eps) {
  MartingaleTransform phi;
  phi.ops.reserve(eps.size());
  for (int e : eps) {
    if (e != 1 && e != -1) throw std::invalid_argument("sign transform entries must be +-1");
    DenseOperator T = identity_operator(S);
    if (e == -1)
      for (auto& x : T.a) x = -x;
    T.kind = OperatorKind::generic;
    phi.ops.push_back(std::move(T));
  }
  return phi;
}

inline BochnerFunction apply_transform(const MartingaleTransform& phi, const WalshPaleyMartingale& M) {
  phi.validate(M.space(), M.n());
  const LpSpace& Y = phi.ops.front().codomain;
  long N = M.terminal().rows;
  Table out(N, Y.dim);
  std::vector<double> d(M.space().dim), td(Y.dim);
  for (long b = 0; b < N; ++b) {
    double* row = out.row(b);
    for (int k = 1; k <= M.n(); ++k) {
      M.difference(k, static_cast<std::uint32_t>(b), d);
      phi.ops[k - 1].apply(d, td);
      for (long j = 0; j < Y.dim; ++j) row[j] += td[j];
    }
  }
  return BochnerFunction(Y, std::move(out));
}

// E <phi(M), F> - E <M_n, phi'(F)> where phi'(F) = sum T_k' dF_k; vanishes
// by the transform duality (Lemma 2.1 pattern).
inline double duality_gap(const WalshPaleyMartingale& M, const BochnerFunction& F,
                          const MartingaleTransform& phi) {
  phi.validate(M.space(), M.n());
  const LpSpace& Y = phi.ops.front().codomain;
  if (!(F.space == dual(Y)))
    throw std::invalid_argument("duality pairing needs F in the dual of the transform codomain");
  if (F.table.rows != M.terminal().rows)
    throw std::invalid_argument("duality pairing needs matching depth");
  long N = M.terminal().rows;

  BochnerFunction phiM = apply_transform(phi, M);
  double lhs = 0.0;
  for (long b = 0; b < N; ++b) lhs += dot(phiM.table.row_span(b), F.table.row_span(b));
  lhs /= static_cast<double>(N);

  // phi'(F): adjoint transform applied to the filtration differences of F
  std::vector<Table> dF = differences(F.table);
  Table adj(N, M.space().dim);
  std::vector<double> td(M.space().dim);
  for (long b = 0; b < N; ++b) {
    double* row = adj.row(b);
    for (int k = 1; k <= M.n(); ++k) {
      DenseOperator Tk = adjoint(phi.ops[k - 1]);
      Tk.apply(dF[k].row_span(b), td);
      for (long j = 0; j < M.space().dim; ++j) row[j] += td[j];
    }
  }
  double rhs = 0.0;
  for (long b = 0; b < N; ++b) rhs += dot(M.terminal().row_span(b), adj.row_span(b));
  rhs /= static_cast<double>(N);

  return lhs - rhs;
}

// Selector e(omega) of Lemma 4.1: the unique index in the intersection of
// the supports of dM_1^infty(omega), ..., dM_n^infty(omega). The support of
// dM_k^infty(omega) is I(omega_{<k}) minus its right endpoint (tent
// profile), so the intersection is computed by exact integer interval
// arithmetic; non-singleton intersections are impossible and raise.
inline long selector_index(int n, const DyadicPoint& w) {
  check_depth(n);
  if (w.n != n) throw std::invalid_argument("point depth mismatch");
  long lo = 0, hi = (1L << n) - 1;  // current intersection as [lo, hi], 0-based
  std::vector<long> excluded;
  for (int k = 1; k <= n; ++k) {
    long start = static_cast<long>(w.prefix_bits(k - 1)) << (n - k + 1);
    long end = start + (1L << (n - k + 1)) - 1;  // inclusive
    lo = std::max(lo, start);
    hi = std::min(hi, end);
    excluded.push_back(end);
  }
  long candidate = -1;
  for (long j = lo; j <= hi; ++j) {
    bool drop = false;
    for (long e : excluded)
      if (e == j) {
        drop = true;
        break;
      }
    if (!drop) {
      if (candidate >= 0) throw std::logic_error("selector support intersection not a singleton");
      candidate = j;
    }
  }
  if (candidate < 0) throw std::logic_error("selector support intersection empty");
  return candidate + 1;  // 1-based index
}

inline std::vector<long> selector_table(int n) {
  check_depth(n);
  long N = 1L << n;
  std::vector<long> e(N);
  for (long b = 0; b < N; ++b) e[b] = selector_index(n, DyadicPoint(n, static_cast<std::uint32_t>(b)));
  return e;
}

// Theorem 3.5(2) tree conditions: values inside the unit ball and
// separated differences.
struct JamesTreeReport {
  bool in_ball = false;
  double min_diff = 0.0;
  double max_level_norm = 0.0;
  bool meets_theta = false;
};

inline JamesTreeReport james_tree_check(const WalshPaleyMartingale& M, double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) throw std::invalid_argument("theta must be in [0, 1)");
  JamesTreeReport rep;
  rep.min_diff = std::numeric_limits<double>::infinity();
  long N = M.terminal().rows;
  for (int k = 0; k <= M.n(); ++k)
    for (long b = 0; b < N; b += 1L << (M.n() - k))
      rep.max_level_norm = std::max(rep.max_level_norm, M.level_norm(k, static_cast<std::uint32_t>(b)));
  for (int k = 1; k <= M.n(); ++k)
    for (long b = 0; b < N; b += 1L << (M.n() - k))
      rep.min_diff = std::min(rep.min_diff, M.difference_norm(k, static_cast<std::uint32_t>(b)));
  rep.in_ball = rep.max_level_norm <= 1.0 + 1e-12;
  rep.meets_theta = rep.in_ball && rep.min_diff >= 1.0 - theta;
  return rep;
}

}  // namespace rumdlab
