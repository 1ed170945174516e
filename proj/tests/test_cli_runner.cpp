#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sqm/cli_runner.hpp"

using namespace sqm;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_beta_config(const std::string& out) {
  json j = json::parse(R"({
    "name": "small_beta",
    "spec": {"case": "tangential", "j": 2, "k": 0, "b0_coeffs": [[0, 0], [0, -1]], "interval": [-1, 1]},
    "recipe": {"beta": "1/8"},
    "sweep": {"h_exponents": [4, 8], "term_counts": [0, 1, 2], "grid": 128},
    "expect": "InfiniteOrderPseudospectrum"
  })");
  j["output_dir"] = out;
  return j;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("sqm_cli_test_" + name);
  fs::remove_all(p);
  return p;
}
}  // namespace

TEST_CASE("bundled configs load and round-trip") {
  for (auto name : {"beta_condition_tangential.json", "factorable_k_eq_j.json", "dxi_beta_condition.json"}) {
    auto cfg = load_config(std::string(SQM_CONFIG_DIR) + "/" + name);
    json once = to_json(cfg);
    json twice = to_json(parse_config(once));
    CHECK(once == twice);
  }
  auto f = load_config(std::string(SQM_CONFIG_DIR) + "/factorable_k_eq_j.json");
  CHECK(f.spec.k == 2);
  CHECK(f.oracle.enabled);
  CHECK(f.expect == VerdictKind::Saturating);
}

TEST_CASE("config errors name the offending key") {
  auto j = small_beta_config("x");
  j["sweep"]["gird"] = 64;
  try {
    parse_config(j);
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sweep.gird") != std::string::npos);
  }
  auto k = small_beta_config("x");
  k.erase("spec");
  CHECK_THROWS_AS(parse_config(k), ConfigError);
  auto v = small_beta_config("x");
  v["expect"] = "Sometimes";
  CHECK_THROWS_AS(parse_config(v), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InvalidInput);
}

TEST_CASE("out-of-range beta is rejected before any computation") {
  auto j = small_beta_config(scratch("bad_beta").string());
  j["recipe"]["beta"] = "1/3";
  CHECK_THROWS_AS(run_experiment(parse_config(j)), InvalidScaling);
  CHECK_FALSE(fs::exists(scratch("bad_beta")));
}

TEST_CASE("a run writes CSV, JSON and one SVG per fit") {
  auto dir = scratch("run");
  auto out = run_experiment(parse_config(small_beta_config(dir.string())));
  CHECK(out.matches);
  CHECK(out.exit_code() == 0);
  CHECK(out.verdict.kind == VerdictKind::InfiniteOrderPseudospectrum);
  std::string csv = slurp(dir / "results.csv");
  CHECK(csv.rfind("case,j,k,beta,N,h,norm_u,norm_Pu,ratio\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5 * 3);
  for (int N : {0, 1, 2}) CHECK(fs::exists(dir / ("fit_N" + std::to_string(N) + ".svg")));
  auto summary = json::parse(slurp(dir / "summary.json"));
  CHECK(summary["verdict"] == "InfiniteOrderPseudospectrum");
  CHECK(summary["condition"] == "BetaCondition");
  CHECK(summary["norm_bounds"]["upper_ok"] == true);
  CHECK(summary["slopes"].size() == 3);
}

TEST_CASE("runs are deterministic") {
  auto a = scratch("det_a"), b = scratch("det_b");
  auto ja = small_beta_config(a.string()), jb = small_beta_config(b.string());
  run_experiment(parse_config(ja));
  RunOptions opt;
  opt.jobs = 2;
  run_experiment(parse_config(jb), opt);
  CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
  auto sa = json::parse(slurp(a / "summary.json")), sb = json::parse(slurp(b / "summary.json"));
  sa.erase("config");
  sb.erase("config");
  CHECK(sa == sb);
}

TEST_CASE("expectation mismatch gives exit code 2") {
  RunOptions opt;
  opt.expect = VerdictKind::Saturating;
  auto out = run_experiment(parse_config(small_beta_config(scratch("mismatch").string())), opt);
  CHECK_FALSE(out.matches);
  CHECK(out.exit_code() == 2);
}

TEST_CASE("case listing and exponent checks") {
  auto t = list_cases();
  CHECK(t.find("Tangential   implemented  implemented") != std::string::npos);
  CHECK(t.find("open") != std::string::npos);
  CHECK(check_exponents(2, 0, 1, 1).rfind("order 1-5b", 0) == 0);
  CHECK_THROWS_AS(check_exponents(2, -1, 0, 0), InvalidInput);
}

TEST_CASE("oracle grid cap from the environment") {
  ::setenv(kOracleGridEnv, "16", 1);
  CHECK(capped_oracle_grid(24) == 16);
  CHECK(capped_oracle_grid(12) == 12);
  ::setenv(kOracleGridEnv, "2", 1);
  CHECK_THROWS_AS(capped_oracle_grid(24), InvalidInput);
  ::unsetenv(kOracleGridEnv);
  CHECK(capped_oracle_grid(24) == 24);
}
