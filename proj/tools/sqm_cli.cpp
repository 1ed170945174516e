#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sqm/cli_runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Quasimode construction and pseudospectrum decay experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, expect;
  int grid = 0, jobs = 0;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--grid", grid, "Points per axis for the sweep grid");
  run->add_option("--jobs", jobs, "Parallel sweep tasks");
  run->add_option("--expect", expect, "Expected verdict (overrides the config)");

  app.add_subcommand("list-cases", "Print the case/condition matrix");

  int ej = 0, kappa = 0, lambda = 0, mu = 0;
  auto* chk = app.add_subcommand("check-exponents", "Print the remainder order for (j, kappa, lambda, mu)");
  chk->add_option("j", ej)->required();
  chk->add_option("kappa", kappa)->required();
  chk->add_option("lambda", lambda)->required();
  chk->add_option("mu", mu)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("list-cases")) {
      std::cout << sqm::list_cases();
      return 0;
    }
    if (app.got_subcommand("check-exponents")) {
      std::cout << sqm::check_exponents(ej, kappa, lambda, mu);
      return 0;
    }
    sqm::RunOptions opt;
    if (!out_dir.empty()) opt.out_dir = out_dir;
    if (grid > 0) opt.grid = grid;
    if (jobs > 0) opt.jobs = jobs;
    if (!expect.empty()) opt.expect = sqm::parse_verdict(expect);
    auto outcome = sqm::run_experiment(sqm::load_config(config_path), opt);
    const auto& s = outcome.summary;
    std::cout << "verdict: " << s["verdict"].get<std::string>() << "\n";
    for (auto& [N, f] : s["slopes"].items())
      std::cout << "  N=" << N << "  slope " << f["slope"].get<double>() << "  max residual "
                << f["max_residual"].get<double>() << "\n";
    for (auto& f : s["failures"]) std::cerr << "failed h=" << f["h"] << ": " << f["reason"].get<std::string>() << "\n";
    std::cout << "artifacts: " << outcome.out_dir.string() << "\n";
    if (!outcome.matches)
      std::cerr << "verdict mismatch: expected " << sqm::to_string(*outcome.expected) << "\n";
    return outcome.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
