#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rumdlab/cli.hpp"
#include "rumdlab/io.hpp"

using namespace rumdlab;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct CliRun {
  int rc = -1;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.rc = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("argument errors exit with code 2 and a reason", "[cli]") {
  CHECK(cli({}).rc == 2);
  CHECK(cli({"bogus"}).rc == 2);

  const CliRun help = cli({"--help"});
  CHECK(help.rc == 0);
  CHECK_THAT(help.out, ContainsSubstring("Subcommands"));

  CliRun r = cli({"verify", "nope"});
  CHECK(r.rc == 2);
  CHECK_THAT(r.err, ContainsSubstring("unknown suite"));

  r = cli({"verify", "lemma3.1", "--n", "4"});  // suite caps n at 3
  CHECK(r.rc == 2);
  CHECK_THAT(r.err, ContainsSubstring("up to 3"));

  CHECK(cli({"sweep", "nope", "--n", "2..4"}).rc == 2);
  CHECK(cli({"sweep", "l1"}).rc == 2);              // missing --n
  CHECK(cli({"sweep", "l1", "--n", "4..13"}).rc == 2);
  CHECK(cli({"sweep", "scalar_q1", "--n", "2..21"}).rc == 2);
  CHECK(cli({"sweep", "l1", "--n", "abc"}).rc == 2);
  CHECK(cli({"sweep", "l1", "--n", "5..3"}).rc == 2);
  CHECK(cli({"sweep", "l1", "--n", "2..4", "--q", "0.5"}).rc == 2);
  CHECK(cli({"sweep", "l1", "--n", "2..4", "--format", "xml"}).rc == 2);

  CHECK(cli({"estimate", "--n", "4"}).rc == 2);  // needs a space or op spec
  CHECK(cli({"estimate", "--space", "l1:16", "--op", "sigma:16", "--n", "4"}).rc == 2);
  CHECK(cli({"estimate", "--space", "x1:3", "--n", "2"}).rc == 2);
  CHECK(cli({"estimate", "--space", "l0.5:3", "--n", "2"}).rc == 2);
  CHECK(cli({"estimate", "--op", "sigma:0", "--n", "2"}).rc == 2);
  CHECK(cli({"estimate", "--space", "l1:4", "--n", "0"}).rc == 2);
  CHECK(cli({"estimate", "--space", "l1:4", "--n", "27"}).rc == 2);
  // random search at this depth would exceed the dense-table cap
  CHECK(cli({"estimate", "--space", "l1:4", "--n", "24", "--budget", "10"}).rc == 2);
}

TEST_CASE("sweep emits the frozen CSV bytes", "[cli]") {
  const CliRun r = cli({"sweep", "sigma_n", "--n", "2..5", "--seed", "7"});
  REQUIRE(r.rc == 0);
  CHECK(r.err.empty());
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "# rumdlab-sweep v1");
  std::getline(lines, line);
  CHECK(line == "n,q,lower,upper,method,seed,wall_time_ms");
  std::getline(lines, line);
  CHECK(line == "2,2,0.42491829279939869,4,canonical_m1;trivial_2n,7,0");
  std::getline(lines, line);
  CHECK(line == "3,2,0.42558483170760658,6,canonical_m1;trivial_2n,7,0");
  std::getline(lines, line);
  CHECK(line == "4,2,0.45150212254945898,8,canonical_m1;trivial_2n,7,0");
  std::getline(lines, line);
  CHECK(line == "5,2,0.48347808310391011,8.9442719099991592,canonical_m1;type2_bound,7,0");
  std::getline(lines, line);
  CHECK_THAT(line, ContainsSubstring("# growth_exponent slope="));

  // single-row sweeps carry no growth trailer
  const CliRun one = cli({"sweep", "l1", "--n", "4", "--seed", "3"});
  REQUIRE(one.rc == 0);
  CHECK_THAT(one.out,
             ContainsSubstring("4,2,2.0916500663351889,8,"
                               "single_difference;canonical_m1;canonical_m1_antisymmetrized;"
                               "trivial_2n,3,0"));
  CHECK(one.out.find("growth_exponent") == std::string::npos);
}

TEST_CASE("identical invocations are byte identical, threads notwithstanding", "[cli]") {
  const std::vector<std::string> args = {"sweep", "sigma_n", "--n", "2..6", "--seed", "11"};
  const CliRun a = cli(args);
  const CliRun b = cli(args);
  REQUIRE(a.rc == 0);
  CHECK(a.out == b.out);

  setenv("RUMDLAB_THREADS", "4", 1);
  const CliRun c = cli(args);
  setenv("RUMDLAB_THREADS", "1", 1);
  const CliRun d = cli(args);
  unsetenv("RUMDLAB_THREADS");
  CHECK(c.out == a.out);
  CHECK(d.out == a.out);

  const std::vector<std::string> est = {"estimate", "--space", "l2:4", "--n",
                                        "3",        "--budget", "30",  "--seed", "5"};
  const CliRun e1 = cli(est);
  const CliRun e2 = cli(est);
  REQUIRE(e1.rc == 0);
  CHECK(e1.out == e2.out);
}

TEST_CASE("scalar_q1 sweeps pin q to one", "[cli]") {
  const CliRun r = cli({"sweep", "scalar_q1", "--n", "2..4", "--q", "3", "--seed", "9"});
  REQUIRE(r.rc == 0);
  CHECK_THAT(r.out, ContainsSubstring("2,1,1,4,translation_probe;trivial_2n,9,0"));
  CHECK_THAT(r.out,
             ContainsSubstring("3,1,1.1428571428571428,6,translation_probe;trivial_2n,9,0"));
  CHECK_THAT(r.out,
             ContainsSubstring("4,1,1.3333333333333333,8,translation_probe;trivial_2n,9,0"));
}

TEST_CASE("sweep json carries rows, fit, and the echoed config", "[cli]") {
  const CliRun r = cli({"sweep", "l2", "--n", "3..5", "--format", "json"});
  REQUIRE(r.rc == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("schema") == "rumdlab-sweep v1");
  REQUIRE(j.at("rows").size() == 3);
  for (const auto& row : j.at("rows")) {
    CHECK_THAT(row.at("lower").get<double>(), WithinAbs(1.0, 1e-12));
    CHECK(row.at("method") == "single_difference;type2_bound");
    CHECK(row.at("wall_time_ms") == 0);
  }
  CHECK(j.at("rows")[1].at("upper") == 4.0);  // 2 sqrt(4) on the l2 identity
  CHECK_THAT(j.at("growth_exponent").at("slope").get<double>(), WithinAbs(0.0, 1e-9));
  CHECK(j.at("config").at("command") == "sweep");
  CHECK(j.at("config").at("target") == "l2");
  CHECK(j.at("config").at("n_lo") == 3);
  CHECK(j.at("config").at("n_hi") == 5);
}

TEST_CASE("estimate json replays through its embedded witness", "[cli]") {
  const CliRun r = cli({"estimate", "--space", "l1:16", "--n", "4"});
  REQUIRE(r.rc == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("schema") == "rumdlab-estimate v1");
  CHECK(j.at("n") == 4);
  CHECK(j.at("q") == 2.0);
  CHECK(j.at("lower").get<double>() == 2.0916500663351889);
  CHECK(j.at("upper").get<double>() == 8.0);
  CHECK_FALSE(j.contains("lower_stderr"));  // exact route, no sampling error
  CHECK(j.at("witness").at("kind") == "canonical_m1_antisymmetrized");
  CHECK(j.at("witness").at("space").at("p") == "1");
  CHECK(j.at("witness").at("space").at("dim") == 16);

  WalshPaleyMartingale M =
      read_martingale_csv(j.at("witness").at("martingale_csv").get<std::string>());
  RumdConfig ex;
  ex.mode = RatioMode::exact;
  CHECK(rumd_ratio(M, identity_operator(LpSpace::l1(16)), 2.0, ex) ==
        j.at("lower").get<double>());

  const CliRun s = cli({"estimate", "--op", "sigma:16", "--n", "4"});
  REQUIRE(s.rc == 0);
  const nlohmann::json js = nlohmann::json::parse(s.out);
  CHECK(js.at("lower").get<double>() == 0.45150212254945898);
  CHECK(js.at("upper").get<double>() == 8.0);
  CHECK(js.at("witness").at("kind") == "canonical_m1");
  const auto& methods = js.at("methods");
  CHECK(std::find(methods.begin(), methods.end(), "single_difference") == methods.end());

  WalshPaleyMartingale W =
      read_martingale_csv(js.at("witness").at("martingale_csv").get<std::string>());
  CHECK(rumd_ratio(W, summation_operator(16), 2.0, ex) == js.at("lower").get<double>());
}

TEST_CASE("reports can be written to a file instead of the stream", "[cli]") {
  const std::string path = "/tmp/rumdlab_cli_test_out.tmp";
  std::remove(path.c_str());

  const CliRun direct = cli({"sweep", "sigma_n", "--n", "2..4", "--seed", "7"});
  const CliRun filed = cli({"sweep", "sigma_n", "--n", "2..4", "--seed", "7", "--out", path});
  REQUIRE(filed.rc == 0);
  CHECK(filed.out == "wrote " + path + "\n");
  CHECK(slurp(path) == direct.out);

  const CliRun est = cli({"estimate", "--space", "l2:3", "--n", "2", "--out", path});
  REQUIRE(est.rc == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(path));
  CHECK_THAT(j.at("lower").get<double>(), WithinAbs(1.0, 1e-12));
  std::remove(path.c_str());

  const CliRun bad = cli({"sweep", "l1", "--n", "2..4", "--out", "/nonexistent_dir/x.csv"});
  CHECK(bad.rc == 1);
  CHECK_THAT(bad.err, ContainsSubstring("cannot open output path"));
}

TEST_CASE("every verification suite passes at a smoke depth", "[cli]") {
  const std::vector<std::vector<std::string>> runs = {
      {"verify", "lemma2.1", "--n", "4"},
      {"verify", "lemma3.1", "--n", "3"},
      {"verify", "lemma3.2", "--n", "40"},
      {"verify", "lemma3.3-1", "--n", "8"},
      {"verify", "lemma4.1", "--n", "10"},
      {"verify", "lemma4.2-1", "--n", "8"},
      {"verify", "lemma4.5-discrete", "--n", "6"},
      {"verify", "lemma5.1", "--n", "5"},
      {"verify", "remark4.2", "--n", "10"},
      {"verify", "cor4.7", "--n", "6"},
  };
  for (const auto& args : runs) {
    const CliRun r = cli(args);
    INFO(args[1]);
    CHECK(r.rc == 0);
    CHECK_THAT(r.out, ContainsSubstring(": PASS"));
  }

  // default n comes from the suite table
  const CliRun def = cli({"verify", "lemma3.3-1"});
  CHECK(def.rc == 0);
  CHECK_THAT(def.out, ContainsSubstring("n=12"));
}

TEST_CASE("verify json report mirrors the human line", "[cli]") {
  const CliRun r = cli({"verify", "lemma4.2-1", "--n", "6", "--format", "json"});
  REQUIRE(r.rc == 0);
  CHECK_THAT(r.out, ContainsSubstring("verify lemma4.2-1 n=6: PASS"));
  const auto brace = r.out.find('{');
  REQUIRE(brace != std::string::npos);
  // the human line also prints a compact details object; the report starts
  // at the first line-leading brace
  const auto start = r.out.find("\n{") + 1;
  const nlohmann::json j = nlohmann::json::parse(r.out.substr(start));
  CHECK(j.at("schema") == "rumdlab-verify v1");
  CHECK(j.at("suite") == "lemma4.2-1");
  CHECK(j.at("n") == 6);
  CHECK(j.at("pass") == true);
  CHECK(j.at("details").at("violations") == 0);
  CHECK(j.at("config").at("command") == "verify");
}

TEST_CASE("run configs round-trip through json", "[cli]") {
  RunConfig c;
  c.command = "sweep";
  c.suite = "lemma3.1";
  c.target = "sigma_n";
  c.space_spec = "l1.5:7";
  c.op_spec = "sigma:32";
  c.n_lo = 2;
  c.n_hi = 9;
  c.q = 2.5;
  c.seed = 987654321;
  c.budget = 500;
  c.exact_cap = 12;
  c.out_path = "/tmp/x.csv";
  c.format = "json";
  c.timing = true;
  c.threads = 3;
  CHECK(config_from_json(config_json(c)) == c);
  CHECK(config_from_json(config_json(RunConfig{})) == RunConfig{});
}

TEST_CASE("martingale csv round-trips bitwise", "[cli]") {
  oracle::TestRng rng(401);
  const double ps[] = {1.0, 1.5, 2.0, p_infinity};
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(4));
    const long dim = 1 + static_cast<long>(rng.index(5));
    const LpSpace S(ps[trial % 4], dim);
    Table t(1L << n, dim);
    for (long b = 0; b < t.rows; ++b)
      for (long j = 0; j < dim; ++j) t.row(b)[j] = rng.sym() * std::pow(10.0, rng.sym() * 8.0);
    WalshPaleyMartingale M(S, std::move(t));

    WalshPaleyMartingale R = read_martingale_csv(martingale_csv(M));
    CHECK(R.n() == M.n());
    CHECK(R.space() == M.space());
    bool same = true;
    for (long b = 0; b < M.terminal().rows; ++b)
      for (long j = 0; j < dim; ++j)
        if (R.terminal().row(b)[j] != M.terminal().row(b)[j]) same = false;
    CHECK(same);
    // writing the reread martingale reproduces the same bytes
    CHECK(martingale_csv(R) == martingale_csv(M));
  }

  CHECK_THROWS_AS(read_martingale_csv(std::string("x,y\n")), std::runtime_error);
  CHECK_THROWS_AS(read_martingale_csv(std::string("n,m,p\n1,2\n")), std::runtime_error);
  CHECK_THROWS_AS(read_martingale_csv(std::string("n,m,p\n1,2,1\n0,0\n")), std::runtime_error);
  CHECK_THROWS_AS(read_martingale_csv(std::string("n,m,p\n1,2,1\n0,0,0\n")), std::runtime_error);
  CHECK_THROWS_AS(read_martingale_csv(std::string("n,m,p\n31,2,1\n")), std::runtime_error);
}

TEST_CASE("operator csv round-trips and recovers structured kinds", "[cli]") {
  std::ostringstream ss;
  write_operator_csv(ss, identity_operator(LpSpace::l2(4)));
  {
    std::istringstream in(ss.str());
    const DenseOperator R = read_operator_csv(in);
    CHECK(R.kind == OperatorKind::identity);
    CHECK(R.domain == LpSpace::l2(4));
  }

  ss.str("");
  write_operator_csv(ss, summation_operator(8));
  {
    std::istringstream in(ss.str());
    const DenseOperator R = read_operator_csv(in);
    CHECK(R.kind == OperatorKind::summation);
    CHECK(R.domain == LpSpace::l1(8));
    CHECK(R.codomain == LpSpace::linf(8));
  }

  oracle::TestRng rng(403);
  DenseOperator G(LpSpace(1.5, 3), LpSpace::l2(2));
  for (auto& v : G.a) v = rng.sym();
  ss.str("");
  write_operator_csv(ss, G);
  {
    std::istringstream in(ss.str());
    const DenseOperator R = read_operator_csv(in);
    CHECK(R.kind == OperatorKind::generic);
    bool same = true;
    for (long i = 0; i < 2; ++i)
      for (long j = 0; j < 3; ++j)
        if (R.at(i, j) != G.at(i, j)) same = false;
    CHECK(same);
  }

  // a near-identity stays generic: detection is an exact pattern match
  DenseOperator P = identity_operator(LpSpace::l2(3));
  P.at(1, 1) = 1.0 + 1e-3;
  P.kind = OperatorKind::generic;
  ss.str("");
  write_operator_csv(ss, P);
  {
    std::istringstream in(ss.str());
    CHECK(read_operator_csv(in).kind == OperatorKind::generic);
  }

  std::istringstream bad("1,2\n");
  CHECK_THROWS_AS(read_operator_csv(bad), std::runtime_error);
}

TEST_CASE("exponent formatting round-trips including inf", "[cli]") {
  CHECK(format_exponent(p_infinity) == "inf");
  CHECK(format_exponent(1.0) == "1");
  CHECK(format_exponent(1.5) == "1.5");
  CHECK(parse_exponent("inf") == p_infinity);
  CHECK(parse_exponent("2") == 2.0);
  CHECK(parse_exponent(format_exponent(1.7)) == 1.7);
  CHECK_THROWS_AS(parse_exponent("2x"), std::runtime_error);
}

TEST_CASE("witness embedding respects the size threshold", "[cli]") {
  RumdEstimate est;
  est.n = 4;
  est.q = 2.0;
  est.lower = 1.0;
  est.witness.kind = WitnessKind::single_difference;
  est.witness.n = 4;
  est.witness.space = LpSpace::l1(8192);  // 2^4 * 8192 doubles, over the cap
  est.witness.vec.assign(8192, 0.0);
  est.witness.vec[0] = 1.0;
  nlohmann::json j = estimate_json(est, 1);
  CHECK(j.at("witness").at("kind") == "single_difference");
  CHECK_FALSE(j.at("witness").contains("martingale_csv"));

  est.witness.space = LpSpace::l1(4);  // 64 doubles, embedded
  est.witness.vec.assign(4, 0.0);
  est.witness.vec[2] = 1.0;
  j = estimate_json(est, 1);
  REQUIRE(j.at("witness").contains("martingale_csv"));
  WalshPaleyMartingale M =
      read_martingale_csv(j.at("witness").at("martingale_csv").get<std::string>());
  CHECK(M.n() == 4);
  CHECK(M.terminal().row(0)[2] == 1.0);

  RumdEstimate none;
  j = estimate_json(none, 1);
  CHECK(j.at("witness").at("kind") == "none");
  CHECK_FALSE(j.at("witness").contains("martingale_csv"));
}

TEST_CASE("monte carlo estimates report their sampling error", "[cli]") {
  // 2n = 20 exceeds the default exact cap, so budgeted search samples
  const CliRun r = cli({"estimate", "--space", "l1:4", "--n", "10", "--budget", "12",
                        "--seed", "3"});
  REQUIRE(r.rc == 0);
  const nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("lower").get<double>() >= 1.0 - 1e-12);  // keeps the exact baseline
  const auto& methods = j.at("methods");
  CHECK(std::find(methods.begin(), methods.end(), "random_search") != methods.end());
  if (j.at("witness").at("kind") == "random_search") CHECK(j.contains("lower_stderr"));
}
