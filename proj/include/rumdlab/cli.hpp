#pragma once
// Command-line front end: lemma verification suites, RUMD sweeps over n,
// single estimates. Identical (config, seed) produces byte-identical output;
// wall-clock numbers appear only behind --timing.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rumdlab/canonical.hpp"
#include "rumdlab/io.hpp"
#include "rumdlab/martingales.hpp"
#include "rumdlab/operators.hpp"
#include "rumdlab/rng.hpp"
#include "rumdlab/rumd.hpp"
#include "rumdlab/wedge.hpp"

namespace rumdlab {

struct RunConfig {
  std::string command;     // verify | sweep | estimate
  std::string suite;       // verify suite id
  std::string target;      // sweep target
  std::string space_spec;  // l<p>:<m>
  std::string op_spec;     // sigma:<N>
  int n_lo = 0;
  int n_hi = 0;
  double q = 2.0;
  std::uint64_t seed = 1;
  long budget = 0;
  int exact_cap = 16;
  std::string out_path;
  std::string format = "csv";  // csv | json
  bool timing = false;
  int threads = 1;

  bool operator==(const RunConfig&) const = default;
};

inline nlohmann::json config_json(const RunConfig& c) {
  return {{"command", c.command},   {"suite", c.suite},
          {"target", c.target},     {"space", c.space_spec},
          {"op", c.op_spec},        {"n_lo", c.n_lo},
          {"n_hi", c.n_hi},         {"q", c.q},
          {"seed", c.seed},         {"budget", c.budget},
          {"exact_cap", c.exact_cap}, {"out", c.out_path},
          {"format", c.format},     {"timing", c.timing},
          {"threads", c.threads}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  c.suite = j.at("suite").get<std::string>();
  c.target = j.at("target").get<std::string>();
  c.space_spec = j.at("space").get<std::string>();
  c.op_spec = j.at("op").get<std::string>();
  c.n_lo = j.at("n_lo").get<int>();
  c.n_hi = j.at("n_hi").get<int>();
  c.q = j.at("q").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.budget = j.at("budget").get<long>();
  c.exact_cap = j.at("exact_cap").get<int>();
  c.out_path = j.at("out").get<std::string>();
  c.format = j.at("format").get<std::string>();
  c.timing = j.at("timing").get<bool>();
  c.threads = j.at("threads").get<int>();
  return c;
}

namespace detail {

// "--n 7" or "--n 4..12".
inline bool parse_range(const std::string& s, int& lo, int& hi) {
  auto dots = s.find("..");
  try {
    size_t pos = 0;
    if (dots == std::string::npos) {
      lo = hi = std::stoi(s, &pos);
      return pos == s.size();
    }
    lo = std::stoi(s.substr(0, dots), &pos);
    if (pos != dots) return false;
    hi = std::stoi(s.substr(dots + 2), &pos);
    return pos == s.size() - dots - 2 && lo <= hi;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Verification suites. Each returns pass/fail plus the measured quantities;
// the caller renders them as a human line and optionally JSON.

struct SuiteResult {
  std::string suite;
  int n = 0;
  bool pass = false;
  nlohmann::json details;
};

namespace suites {

// Transform duality: E<phi(M), F> = E<M_n, phi'(F)> for martingale
// transforms phi, random (M, F, phi) across p-norms.
inline SuiteResult lemma21(int n, std::uint64_t seed) {
  SuiteResult res{"lemma2.1", n, true, {}};
  const double tol = 1e-10;
  const double ps[] = {1.0, 1.5, 2.0, 3.0, p_infinity};
  const long dims[] = {2, 3, 5, 8};
  double worst = 0.0;
  long trials = 500;
  CounterRng root(seed, fnv1a("suite.lemma2.1"));
  for (long t = 0; t < trials; ++t) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(t));
    int nt = 1 + static_cast<int>(t % n);
    long N = 1L << nt;
    LpSpace X(ps[t % 5], dims[t % 4]);
    LpSpace Y(ps[(t / 5) % 5], dims[(t / 4) % 4]);
    Table m(N, X.dim);
    for (long b = 0; b < N; ++b)
      for (long j = 0; j < X.dim; ++j) m.row(b)[j] = rng.next_gaussian();
    WalshPaleyMartingale M(X, std::move(m));

    MartingaleTransform phi;
    if (t % 3 == 0) {
      std::vector<int> eps(nt);
      for (int k = 0; k < nt; ++k) eps[k] = rng.next_unit() < 0.5 ? -1 : 1;
      phi = sign_transform(X, eps);
      Y = X;
    } else {
      for (int k = 0; k < nt; ++k) {
        DenseOperator T(X, Y);
        for (long i = 0; i < Y.dim; ++i)
          for (long j = 0; j < X.dim; ++j) T.at(i, j) = rng.next_gaussian();
        phi.ops.push_back(std::move(T));
      }
    }
    Table ft(N, Y.dim);
    for (long b = 0; b < N; ++b)
      for (long j = 0; j < Y.dim; ++j) ft.row(b)[j] = rng.next_gaussian();
    BochnerFunction F(dual(Y), std::move(ft));

    double gap = std::fabs(duality_gap(M, F, phi));
    worst = std::max(worst, gap);
    if (gap > tol) res.pass = false;
  }
  res.details = {{"trials", trials}, {"max_gap", worst}, {"tolerance", tol}};
  return res;
}

// Wedge identity for conditional expectations: the k-fold exterior product
// of M_0..M_k equals 2^{-k} times the product over sibling-block averages.
inline SuiteResult lemma31(int n, std::uint64_t seed) {
  SuiteResult res{"lemma3.1", n, true, {}};
  const double tol = 1e-9;
  double worst = 0.0;
  bool all_certified = true;
  CounterRng root(seed, fnv1a("suite.lemma3.1"));
  int trial = 0;
  for (double p : {1.0, p_infinity}) {
    for (int rep = 0; rep < 3; ++rep, ++trial) {
      CounterRng rng = root.split(static_cast<std::uint64_t>(trial));
      long N = 1L << n;
      LpSpace X(p, 4);
      Table t(N, X.dim);
      for (long b = 0; b < N; ++b)
        for (long j = 0; j < X.dim; ++j) t.row(b)[j] = rng.next_gaussian();
      WalshPaleyMartingale M(X, std::move(t));
      for (int k = 1; k <= n; ++k)
        for (std::uint32_t bits = 0; bits < static_cast<std::uint32_t>(N); ++bits) {
          WedgeComparison c = verify_lemma31(M, k, DyadicPoint(n, bits));
          double err = std::fabs(c.lhs - c.rhs) / std::max(1.0, std::fabs(c.lhs));
          worst = std::max(worst, err);
          all_certified = all_certified && c.certified;
          if (err > tol || !c.certified) res.pass = false;
        }
    }
  }
  res.details = {{"max_rel_err", worst}, {"tolerance", tol}, {"certified", all_certified}};
  return res;
}

// Wedge vs pi_2 bound: |u e_1 ^ ... ^ u e_k| <= pi_2(u)^k / sqrt(k!).
// Here n counts random operators.
inline SuiteResult lemma32(int trials, std::uint64_t seed) {
  SuiteResult res{"lemma3.2", trials, true, {}};
  double worst_margin = 0.0;  // max lhs/rhs observed, must stay <= 1
  long certified = 0;
  CounterRng root(seed, fnv1a("suite.lemma3.2"));
  for (int t = 0; t < trials; ++t) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(t));
    long k = 1 + t % 4;
    long m = 1 + t % 8;
    DenseOperator u(LpSpace::l2(k), LpSpace::l1(m));
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < k; ++j) u.at(i, j) = rng.next_gaussian();
    WedgeComparison c = verify_lemma32(u);
    double margin = c.rhs > 0.0 ? c.lhs / c.rhs : (c.lhs > 0.0 ? 2.0 : 0.0);
    worst_margin = std::max(worst_margin, margin);
    certified += c.certified ? 1 : 0;
    // An uncertified lhs is still a valid lower bound for the wedge, so any
    // lhs > rhs is a genuine violation either way.
    if (c.lhs > c.rhs * (1.0 + 1e-9) + 1e-12) res.pass = false;
  }
  res.details = {{"trials", trials},
                 {"max_lhs_over_rhs", worst_margin},
                 {"certified", certified}};
  return res;
}

// M^1 norm identities, exact: ||M_k^1(w)||_1 = ||dM_k^1(w)||_1 = 1.
inline SuiteResult lemma331(int n, std::uint64_t) {
  SuiteResult res{"lemma3.3-1", n, true, {}};
  WalshPaleyMartingale M = haar_l1(n);
  long bad = 0;
  std::vector<double> d(M.space().dim);
  for (int k = 0; k <= n; ++k)
    for (std::uint32_t pre = 0; pre < (1u << k); ++pre) {
      std::uint32_t bits = pre << (n - k);
      if (norm(M.level_value(k, bits), M.space()) != 1.0) ++bad;
      if (k >= 1) {
        M.difference(k, bits, d);
        if (norm(d, M.space()) != 1.0) ++bad;
      }
    }
  res.pass = bad == 0;
  res.details = {{"violations", bad}, {"comparison", "exact"}};
  return res;
}

// Selector functional: mu{ w : |dM_k^inf(w)[e(w)]| >= 1/4 } >= 1/2, each k.
inline SuiteResult lemma41(int n, std::uint64_t) {
  SuiteResult res{"lemma4.1", n, true, {}};
  std::vector<long> sel = selector_table(n);
  long N = 1L << n;
  double min_measure = 1.0;
  for (int k = 1; k <= n; ++k) {
    long cnt = 0;
    for (long b = 0; b < N; ++b)
      if (std::fabs(canonical::minf_difference_entry(n, k, static_cast<std::uint32_t>(b),
                                                     sel[b] - 1)) >= 0.25)  // 1-based selector
        ++cnt;
    double measure = static_cast<double>(cnt) / static_cast<double>(N);
    min_measure = std::min(min_measure, measure);
    if (measure < 0.5) res.pass = false;
  }
  res.details = {{"min_measure", min_measure}, {"threshold", 0.5}};
  return res;
}

// M^inf norm identities, exact: ||M_k^inf(w)||_inf = 1, ||dM_k^inf(w)||_inf = 1/2.
inline SuiteResult lemma421(int n, std::uint64_t) {
  SuiteResult res{"lemma4.2-1", n, true, {}};
  WalshPaleyMartingale M = summation_image(n);
  long bad = 0;
  std::vector<double> d(M.space().dim);
  for (int k = 0; k <= n; ++k)
    for (std::uint32_t pre = 0; pre < (1u << k); ++pre) {
      std::uint32_t bits = pre << (n - k);
      if (norm(M.level_value(k, bits), M.space()) != 1.0) ++bad;
      if (k >= 1) {
        M.difference(k, bits, d);
        if (norm(d, M.space()) != 0.5) ++bad;
      }
    }
  res.pass = bad == 0;
  res.details = {{"violations", bad}, {"comparison", "exact"}};
  return res;
}

// Discrete type-2 bound for the integration map on point measures:
// (E_eps ||Phi(sum eps_j mu_j)||_inf^2)^{1/2} <= 2 (sum ||mu_j||_TV^2)^{1/2}.
// Here n is the family size J (exact enumeration of 2^J sign patterns).
inline SuiteResult lemma45discrete(int J, std::uint64_t seed) {
  SuiteResult res{"lemma4.5-discrete", J, true, {}};
  const long trials = 60;
  double worst = 0.0;
  CounterRng root(seed, fnv1a("suite.lemma4.5"));
  for (long t = 0; t < trials; ++t) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(t));
    std::vector<PointMeasure> mus;
    double tv2 = 0.0;
    for (int j = 0; j < J; ++j) {
      int atoms = 1 + static_cast<int>(rng.next_unit() * 5.0);
      std::vector<std::pair<double, double>> a;
      for (int i = 0; i < atoms; ++i) a.emplace_back(rng.next_unit(), rng.next_gaussian());
      mus.emplace_back(std::move(a));
      double tv = total_variation(mus.back());
      tv2 += tv * tv;
    }
    double acc = 0.0;
    long patterns = 1L << J;
    for (long e = 0; e < patterns; ++e) {
      PointMeasure s;
      for (int j = 0; j < J; ++j)
        s = measure_sum(s, measure_scale(mus[j], (e >> j) & 1 ? -1.0 : 1.0));
      double sup = phi_apply(s).sup_norm;
      acc += sup * sup;
    }
    double lhs = std::sqrt(acc / static_cast<double>(patterns));
    double rhs = 2.0 * std::sqrt(tv2);
    worst = std::max(worst, rhs > 0.0 ? lhs / rhs : 0.0);
    if (lhs > rhs * (1.0 + 1e-12)) res.pass = false;
  }
  res.details = {{"trials", trials}, {"max_lhs_over_rhs", worst}, {"constant", 2.0}};
  return res;
}

// Translation-martingale difference identity:
// ||sum_k a_k dM_k^f(w)|| = ||sum_k a_k df_k|| for every w.
inline SuiteResult lemma51(int n, std::uint64_t seed) {
  SuiteResult res{"lemma5.1", n, true, {}};
  const double tol = 1e-10;
  long N = 1L << n;

  // chi_{(1,..,1)} reproduces the identity-martingale terminal exactly.
  {
    Table chi(N, 1);
    chi.row(0)[0] = 1.0;
    WalshPaleyMartingale IM = translation_martingale(BochnerFunction(LpSpace::l1(N), std::move(chi)));
    WalshPaleyMartingale H = haar_l1(n);
    for (long b = 0; b < N; ++b)
      for (long j = 0; j < N; ++j)
        if (IM.terminal().row(b)[j] != H.terminal().row(b)[j]) res.pass = false;
  }

  double worst = 0.0;
  const long trials = 20;
  CounterRng root(seed, fnv1a("suite.lemma5.1"));
  for (long t = 0; t < trials; ++t) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(t));
    LpSpace S(t % 2 == 0 ? 1.0 : 2.0, N);
    Table ft(N, 1);
    for (long b = 0; b < N; ++b) ft.row(b)[0] = rng.next_gaussian();
    WalshPaleyMartingale scalar(LpSpace(2.0, 1), Table(ft));  // f's own filtration
    WalshPaleyMartingale IM = translation_martingale(BochnerFunction(S, std::move(ft)));

    std::vector<double> alpha(n);
    for (int k = 0; k < n; ++k) alpha[k] = rng.next_gaussian();

    std::vector<double> g(N, 0.0), diff(1);
    for (long bp = 0; bp < N; ++bp)
      for (int k = 1; k <= n; ++k) {
        scalar.difference(k, static_cast<std::uint32_t>(bp), diff);
        g[bp] += alpha[k - 1] * diff[0];
      }
    double rhs = norm(g, S);

    std::vector<double> v(N), dk(N);
    for (long b = 0; b < N; ++b) {
      std::fill(v.begin(), v.end(), 0.0);
      for (int k = 1; k <= n; ++k) {
        IM.difference(k, static_cast<std::uint32_t>(b), dk);
        for (long j = 0; j < N; ++j) v[j] += alpha[k - 1] * dk[j];
      }
      double lhs = norm(v, S);
      double err = std::fabs(lhs - rhs) / std::max(1.0, std::fabs(rhs));
      worst = std::max(worst, err);
      if (err > tol) res.pass = false;
    }
  }
  res.details = {{"trials", trials}, {"max_rel_err", worst}, {"tolerance", tol}};
  return res;
}

// Remark after the M^inf norm identities: at w = (1,..,1) the signed
// difference sums stay uniformly bounded by 2 — no sqrt(n) growth at the
// extreme corner. Exact max over all sign patterns, two evaluators.
inline SuiteResult remark42(int n, std::uint64_t) {
  SuiteResult res{"remark4.2", n, true, {}};
  double best = canonical::sigma_sign_max_at(n, 0);
  double cross = 0.0;
  long half = 1L << (n - 1);
  for (long t = 0; t < half; ++t)
    cross = std::max(cross, canonical::minf_sign_sup(n, 0, static_cast<std::uint32_t>(t << 1)));
  res.pass = best <= 2.0 && best == cross;
  res.details = {{"max_over_eps", best}, {"bound", 2.0}, {"evaluators_agree", best == cross}};
  return res;
}

// Signed vs absolute differences: dM_k^inf(w) = w_k |dM_k^inf(w)|, so the
// (eps, w) double averages of || sum eps_k dM_k ||_inf and
// || sum eps_k |dM_k| ||_inf coincide. Full double enumeration.
inline SuiteResult cor47(int n, std::uint64_t) {
  SuiteResult res{"cor4.7", n, true, {}};
  long N = 1L << n;
  double acc_signed = 0.0, acc_abs = 0.0;
  std::vector<double> ent(static_cast<size_t>(n) * N);
  for (long b = 0; b < N; ++b) {
    for (int k = 1; k <= n; ++k)
      for (long j = 0; j < N; ++j)
        ent[static_cast<size_t>(k - 1) * N + j] =
            canonical::minf_difference_entry(n, k, static_cast<std::uint32_t>(b), j);
    for (long e = 0; e < N; ++e) {
      double sup_s = 0.0, sup_a = 0.0;
      for (long j = 0; j < N; ++j) {
        double vs = 0.0, va = 0.0;
        for (int k = 1; k <= n; ++k) {
          double sgn = (e >> (k - 1)) & 1 ? -1.0 : 1.0;
          double x = ent[static_cast<size_t>(k - 1) * N + j];
          vs += sgn * x;
          va += sgn * std::fabs(x);
        }
        sup_s = std::max(sup_s, std::fabs(vs));
        sup_a = std::max(sup_a, std::fabs(va));
      }
      acc_signed += sup_s * sup_s;
      acc_abs += sup_a * sup_a;
    }
  }
  double pairs = static_cast<double>(N) * static_cast<double>(N);
  double lhs = std::sqrt(acc_signed / pairs);
  double rhs = std::sqrt(acc_abs / pairs);
  double err = std::fabs(lhs - rhs) / std::max(1.0, lhs);
  res.pass = err <= 1e-12;
  res.details = {{"signed", lhs}, {"absolute", rhs}, {"rel_err", err}, {"tolerance", 1e-12}};
  return res;
}

}  // namespace suites

// ---------------------------------------------------------------------------

namespace detail {

struct SuiteSpec {
  const char* name;
  int default_n;
  int max_n;
  SuiteResult (*run)(int, std::uint64_t);
};

inline const SuiteSpec* find_suite(const std::string& name) {
  static const SuiteSpec table[] = {
      {"lemma2.1", 6, 10, suites::lemma21},
      {"lemma3.1", 3, 3, suites::lemma31},
      {"lemma3.2", 100, 10000, suites::lemma32},
      {"lemma3.3-1", 12, 12, suites::lemma331},
      {"lemma4.1", 12, 16, suites::lemma41},
      {"lemma4.2-1", 12, 12, suites::lemma421},
      {"lemma4.5-discrete", 8, 16, suites::lemma45discrete},
      {"lemma5.1", 6, 10, suites::lemma51},
      {"remark4.2", 13, 20, suites::remark42},
      {"cor4.7", 8, 10, suites::cor47},
  };
  for (const auto& s : table)
    if (name == s.name) return &s;
  return nullptr;
}

inline int emit_report(const RunConfig& cfg, const nlohmann::json& report,
                       const std::string& human, std::ostream& out, std::ostream& err) {
  out << human;
  if (cfg.format == "json") out << report.dump(2) << '\n';
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    if (!f) {
      err << "cannot open output path: " << cfg.out_path << '\n';
      return 1;
    }
    f << report.dump(2) << '\n';
  }
  return -1;  // caller decides
}

}  // namespace detail

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const detail::SuiteSpec* spec = detail::find_suite(cfg.suite);
  if (!spec) {
    err << "unknown suite: " << cfg.suite
        << " (known: lemma2.1 lemma3.1 lemma3.2 lemma3.3-1 lemma4.1 lemma4.2-1"
           " lemma4.5-discrete lemma5.1 remark4.2 cor4.7)\n";
    return 2;
  }
  int n = cfg.n_lo > 0 ? cfg.n_lo : spec->default_n;
  if (n > spec->max_n) {
    err << "suite " << cfg.suite << " supports --n up to " << spec->max_n << '\n';
    return 2;
  }
  SuiteResult res = spec->run(n, cfg.seed);
  nlohmann::json report = {{"schema", "rumdlab-verify v1"},
                           {"suite", res.suite},
                           {"n", res.n},
                           {"pass", res.pass},
                           {"details", res.details},
                           {"config", config_json(cfg)}};
  std::ostringstream human;
  human << "verify " << res.suite << " n=" << res.n << ": " << (res.pass ? "PASS" : "FAIL")
        << ' ' << res.details.dump() << '\n';
  int rc = detail::emit_report(cfg, report, human.str(), out, err);
  if (rc >= 0) return rc;
  return res.pass ? 0 : 1;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const bool is_l1 = cfg.target == "l1";
  const bool is_sigma = cfg.target == "sigma_n";
  const bool is_l2 = cfg.target == "l2";
  const bool is_scalar = cfg.target == "scalar_q1";
  if (!is_l1 && !is_sigma && !is_l2 && !is_scalar) {
    err << "unknown sweep target: " << cfg.target << " (known: l1 sigma_n l2 scalar_q1)\n";
    return 2;
  }
  if (cfg.n_lo < 1) {
    err << "sweep needs --n a..b with a >= 1\n";
    return 2;
  }
  if ((is_l1 || is_sigma) && cfg.n_hi > 12) {
    err << "sweep target " << cfg.target
        << " builds a dense 2^n x 2^n operator; use --n up to 12\n";
    return 2;
  }
  if (is_scalar && cfg.n_hi > 20) {
    err << "sweep target scalar_q1 supports --n up to 20\n";
    return 2;
  }
  double q = is_scalar ? 1.0 : cfg.q;

  std::vector<SweepRow> rows;
  std::vector<std::pair<double, double>> series;
  for (int n = cfg.n_lo; n <= cfg.n_hi; ++n) {
    auto t0 = std::chrono::steady_clock::now();
    SweepRow row;
    row.n = n;
    row.q = q;
    row.seed = cfg.seed;
    if (is_scalar) {
      row.lower = rumd1_scalar_probe(n);
      row.upper = 2.0 * n;  // trivial transform bound for the identity
      row.method = "translation_probe;trivial_2n";
    } else {
      DenseOperator T = is_sigma ? summation_operator(1L << n)
                        : is_l1  ? identity_operator(LpSpace::l1(1L << n))
                                 : identity_operator(LpSpace::l2(4));
      LowerConfig lc;
      lc.strategy = cfg.budget > 0 ? LowerStrategy::both : LowerStrategy::canonical;
      lc.budget = cfg.budget > 0 ? cfg.budget : 200;
      lc.seed = cfg.seed;
      lc.ratio.exact_pair_cap = cfg.exact_cap;
      lc.ratio.seed = cfg.seed;
      RumdEstimate est = rumd_lower(T, n, q, lc);
      row.lower = est.lower;
      row.upper = est.upper;
      row.method = join_methods(est.methods);
    }
    if (cfg.timing)
      row.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    series.emplace_back(static_cast<double>(n), row.lower);
    rows.push_back(std::move(row));
  }

  GrowthFit fit;
  bool have_fit = series.size() >= 3;
  if (have_fit) fit = growth_exponent(series);

  std::ostringstream body;
  if (cfg.format == "json") {
    nlohmann::json j = sweep_json(rows, have_fit ? &fit : nullptr);
    j["config"] = config_json(cfg);
    body << j.dump(2) << '\n';
  } else {
    write_sweep_csv(body, rows, have_fit ? &fit : nullptr);
  }
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    if (!f) {
      err << "cannot open output path: " << cfg.out_path << '\n';
      return 1;
    }
    f << body.str();
    out << "wrote " << cfg.out_path << '\n';
  } else {
    out << body.str();
  }
  return 0;
}

inline int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.space_spec.empty() == cfg.op_spec.empty()) {
    err << "estimate needs exactly one of --space l<p>:<m> or --op sigma:<N>\n";
    return 2;
  }
  DenseOperator T;
  try {
    if (!cfg.space_spec.empty()) {
      const std::string& s = cfg.space_spec;
      auto colon = s.find(':');
      if (s.empty() || s[0] != 'l' || colon == std::string::npos)
        throw std::runtime_error("malformed");
      double p = parse_exponent(s.substr(1, colon - 1));
      long m = std::stol(s.substr(colon + 1));
      if (!(p >= 1.0) || m < 1) throw std::runtime_error("malformed");
      T = identity_operator(LpSpace(p, m));
    } else {
      const std::string& s = cfg.op_spec;
      if (s.rfind("sigma:", 0) != 0) throw std::runtime_error("malformed");
      long N = std::stol(s.substr(6));
      if (N < 1) throw std::runtime_error("malformed");
      T = summation_operator(N);
    }
  } catch (const std::exception&) {
    err << "cannot parse operator spec (--space l<p>:<m> or --op sigma:<N>)\n";
    return 2;
  }
  int n = cfg.n_lo;
  if (n < 1 || n > 26) {
    err << "estimate needs --n between 1 and 26\n";
    return 2;
  }
  if (cfg.budget > 0 && (1L << n) * T.domain.dim > max_table_doubles) {
    err << "random search stores a dense 2^n x " << T.domain.dim
        << " table, over the cap; lower --n or drop --budget\n";
    return 2;
  }

  LowerConfig lc;
  lc.strategy = cfg.budget > 0 ? LowerStrategy::both : LowerStrategy::canonical;
  lc.budget = cfg.budget > 0 ? cfg.budget : 200;
  lc.seed = cfg.seed;
  lc.ratio.exact_pair_cap = cfg.exact_cap;
  lc.ratio.seed = cfg.seed;

  RumdEstimate est;
  try {
    est = rumd_lower(T, n, cfg.q, lc);
  } catch (const std::exception& e) {
    err << "estimate failed: " << e.what() << " (raise --exact-cap or lower --n)\n";
    return 2;
  }

  nlohmann::json j = estimate_json(est, cfg.seed);
  j["config"] = config_json(cfg);
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    if (!f) {
      err << "cannot open output path: " << cfg.out_path << '\n';
      return 1;
    }
    f << j.dump(2) << '\n';
    out << "wrote " << cfg.out_path << '\n';
  } else {
    out << j.dump(2) << '\n';
  }
  return 0;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  if (const char* tc = std::getenv("RUMDLAB_THREADS")) {
    int t = std::atoi(tc);
    cfg.threads = t >= 1 ? t : 1;
  }

  CLI::App app{"Walsh-Paley martingale RUMD laboratory"};
  app.require_subcommand(1);
  std::string nspec;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--n,--n-range", nspec, "depth n, or a range a..b");
    sub->add_option("--q", cfg.q, "moment exponent q >= 1");
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--budget", cfg.budget, "random-search ratio evaluations");
    sub->add_option("--exact-cap", cfg.exact_cap, "max 2n for exact (eps, w) enumeration");
    sub->add_option("--out", cfg.out_path, "write the report/CSV to this path");
    sub->add_option("--format", cfg.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--timing", cfg.timing, "fill wall_time_ms (breaks byte determinism)");
  };

  CLI::App* verify = app.add_subcommand("verify", "run a lemma verification suite");
  verify->add_option("suite", cfg.suite, "suite id, e.g. lemma3.1")->required();
  add_common(verify);

  CLI::App* sweep = app.add_subcommand("sweep", "RUMD bounds over a range of n");
  sweep->add_option("target", cfg.target, "l1 | sigma_n | l2 | scalar_q1")->required();
  add_common(sweep);

  CLI::App* estimate = app.add_subcommand("estimate", "single RUMD estimate");
  estimate->add_option("--space", cfg.space_spec, "identity on l<p>:<m>");
  estimate->add_option("--op", cfg.op_spec, "operator spec sigma:<N>");
  add_common(estimate);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << e.what() << '\n';
    return 2;
  }

  if (!nspec.empty() && !detail::parse_range(nspec, cfg.n_lo, cfg.n_hi)) {
    err << "cannot parse --n value '" << nspec << "' (want an integer or a..b)\n";
    return 2;
  }
  if (!(cfg.q >= 1.0)) {
    err << "--q must be >= 1\n";
    return 2;
  }

  try {
    if (verify->parsed()) {
      cfg.command = "verify";
      return cmd_verify(cfg, out, err);
    }
    if (sweep->parsed()) {
      cfg.command = "sweep";
      return cmd_sweep(cfg, out, err);
    }
    cfg.command = "estimate";
    return cmd_estimate(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rumdlab
