#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rumdlab/canonical.hpp"
#include "rumdlab/martingales.hpp"

using namespace rumdlab;
using Catch::Matchers::WithinRel;

namespace {

// dM_1..dM_n of a dense martingale at omega = bits, for the sign oracles.
std::vector<std::vector<double>> dense_differences(const WalshPaleyMartingale& M,
                                                   std::uint32_t bits) {
  std::vector<std::vector<double>> vs;
  for (int k = 1; k <= M.n(); ++k) vs.push_back(M.difference(k, DyadicPoint(M.n(), bits)));
  return vs;
}

}  // namespace

TEST_CASE("unit-vector sign sums match dense enumeration at every eps", "[canonical]") {
  for (int n = 1; n <= 6; ++n) {
    const WalshPaleyMartingale M = haar_l1(n);
    const LpSpace S = LpSpace::l1(1L << n);
    // the block evaluator never looks at omega; the dense sums confirm that
    for (std::uint32_t bits : {0u, 1u, (1u << n) - 1u}) {
      const auto vs = dense_differences(M, bits);
      for (std::uint32_t eps = 0; eps < (1u << n); ++eps)
        CHECK(canonical::haar_sign_l1(n, eps) ==
              oracle::signed_sum_norm(vs, S, eps));
    }
  }
}

TEST_CASE("summation-image sign sums match dense enumeration", "[canonical]") {
  for (int n = 1; n <= 6; ++n) {
    const WalshPaleyMartingale M = summation_image(n);
    const LpSpace S = LpSpace::linf(1L << n);
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
      const auto vs = dense_differences(M, bits);
      const canonical::SigmaSignEvaluator ev(n, bits);
      for (std::uint32_t eps = 0; eps < (1u << n); ++eps) {
        const double want = oracle::signed_sum_norm(vs, S, eps);
        CHECK(ev.linf(eps) == want);  // block boundaries carry the sup: exact
        CHECK(canonical::minf_sign_sup(n, bits, eps) == want);
      }
      for (double q : {1.0, 2.0})
        CHECK_THAT(canonical::sigma_sign_moment_at(n, bits, q),
                   WithinRel(oracle::sign_power_mean_naive(vs, S, q), 1e-13));
      CHECK(canonical::sigma_sign_max_at(n, bits) ==
            oracle::sign_sup_naive(vs, S));
      CHECK_THAT(canonical::minf_sign_moment_at(n, bits, 1.0),
                 WithinRel(oracle::sign_power_mean_naive(vs, S, 1.0), 1e-13));
    }
  }
}

TEST_CASE("antisymmetrized sign sums match dense enumeration", "[canonical]") {
  for (int n = 2; n <= 6; ++n) {
    const WalshPaleyMartingale M = haar_l1_antisymmetrized(n);
    const LpSpace S = LpSpace::l1(1L << n);
    for (std::uint32_t bits : {0u, 3u, (1u << n) - 1u}) {
      const auto vs = dense_differences(M, bits);
      const canonical::AntiSignEvaluator ev(n, bits);
      for (std::uint32_t eps = 0; eps < (1u << n); ++eps)
        CHECK(ev.l1(eps) == oracle::signed_sum_norm(vs, S, eps));
      for (double q : {1.0, 2.0})
        CHECK_THAT(canonical::anti_sign_moment_at(n, bits, q),
                   WithinRel(oracle::sign_power_mean_naive(vs, S, q), 1e-13));
    }
  }
}

TEST_CASE("first moments obey the closed-form laws", "[canonical]") {
  // E_eps ||sum eps_k dM_k^1||_1 = (n+1)/2, omega-free by construction
  for (int n = 1; n <= 20; ++n) {
    CHECK(canonical::haar_sign_moment(n, 1.0) == 0.5 * (n + 1));
    CHECK(canonical::haar_l1_rademacher_mean(n) == 0.5 * (n + 1));
  }
  // the antisymmetrized family trades the additive constant for a full n
  CHECK(canonical::anti_sign_moment(1, 1.0) == 2.0);
  for (int n = 2; n <= 12; ++n)
    CHECK(canonical::anti_sign_moment(n, 1.0) == static_cast<double>(n));
  // and is omega-free even though its block refinement is not
  for (int n = 2; n <= 6; ++n)
    for (std::uint32_t bits = 1; bits < (1u << n); ++bits)
      CHECK(canonical::anti_sign_moment_at(n, bits, 1.0) ==
            canonical::anti_sign_moment_at(n, 0u, 1.0));
}

TEST_CASE("summation-image moments depend on omega", "[canonical]") {
  // smallest depth where the minf averages split; values frozen from full
  // enumeration
  CHECK(canonical::minf_sign_moment_at(3, 0u, 1.0) == 0.6875);
  CHECK(canonical::minf_sign_moment_at(3, 2u, 1.0) == 0.75);
  // the aggregate moment averages the per-omega ones
  double acc = 0.0;
  for (std::uint32_t b = 0; b < 8; ++b) {
    const double m = canonical::minf_sign_moment_at(3, b, 1.0);
    acc += m;
    CHECK((m == 0.6875 || m == 0.75));
  }
  CHECK_THAT(canonical::minf_sign_moment(3, 1.0), WithinRel(acc / 8.0, 1e-15));
}

TEST_CASE("sign sup at the all-plus branch is 1 - 2^-n", "[canonical]") {
  // observed law over the enumerated range; the remark's bound 2 is never
  // approached
  for (int n = 1; n <= 13; ++n)
    CHECK(canonical::sigma_sign_max_at(n, 0u) == 1.0 - std::ldexp(1.0, -n));
  // other branches can exceed 2 (the remark speaks only of the all-plus
  // branch); the triangle bound n/2 always holds since ||dM_k||_inf = 1/2
  double global = 0.0;
  for (int n = 2; n <= 8; ++n)
    for (std::uint32_t b = 0; b < (1u << n); ++b) {
      const double v = canonical::sigma_sign_max_at(n, b);
      CHECK(v >= 1.0 - std::ldexp(1.0, -n));
      CHECK(v <= 0.5 * n);
      global = std::max(global, v);
    }
  CHECK(global > 2.0);  // the all-omega sup genuinely passes 2

}

TEST_CASE("shifted terminal norms match the dense mean shift", "[canonical]") {
  for (int n = 1; n <= 6; ++n) {
    CHECK(canonical::shifted_haar_terminal_norm(n) ==
          2.0 * (1.0 - std::ldexp(1.0, -n)));
    const WalshPaleyMartingale H = haar_l1(n).mean_shifted();
    CHECK(canonical::shifted_haar_terminal_norm(n) ==
          H.level_norm(n, 0u));  // all rows share the norm
    const WalshPaleyMartingale M = summation_image(n).mean_shifted();
    for (std::uint32_t b = 0; b < (1u << n); ++b)
      CHECK(canonical::shifted_minf_terminal_norm(n, b) == M.level_norm(n, b));
  }
}

TEST_CASE("difference entries replay the closed-form tent profile", "[canonical]") {
  for (int n = 1; n <= 6; ++n)
    for (int k = 1; k <= n; ++k)
      for (std::uint32_t b = 0; b < (1u << n); ++b) {
        const auto v = difference_formula_minf(n, k, DyadicPoint(n, b));
        for (long j = 0; j < (1L << n); ++j)
          CHECK(canonical::minf_difference_entry(n, k, b, j) == v[j]);
      }
}

TEST_CASE("sign-enumeration depth is capped", "[canonical]") {
  CHECK_THROWS_AS(canonical::haar_sign_moment(27, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(canonical::sigma_sign_moment(0, 1.0), std::invalid_argument);
}
