#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rliq/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Robust optimal liquidation: singular HJBI solver, bounds, asymptotics and Monte Carlo checks"};
  app.require_subcommand(1);

  rliq::RunOptions opts;
  std::string out, solution;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "experiment config (YAML)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (default: output.dir of the config)");
    sub->add_option("--seed", seed, "random seed (default: seed of the config)");
    sub->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--force", opts.force, "continue when assumption checks fail");
  };
  auto* solve = app.add_subcommand("solve", "solve the value function and write w.csv, meta.json");
  auto* verify = app.add_subcommand("verify", "check the sub/supersolution sandwich and terminal rates");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo costs, saddle and measure checks");
  auto* asym = app.add_subcommand("asymptotics", "small-ambiguity expansion over a theta sweep");
  for (auto* sub : {solve, verify, simulate, asym}) add_common(sub);
  for (auto* sub : {verify, simulate})
    sub->add_option("--solution", solution, "directory written by `solve` for the same config")
        ->check(CLI::ExistingDirectory);
  asym->add_option("--theta", opts.thetas, "ambiguity levels (overrides asymptotics.thetas)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rliq::kExitUsage;
  }
  if (!out.empty()) opts.out_dir = out;
  if (!solution.empty()) opts.solution_dir = solution;
  for (auto* sub : {solve, verify, simulate, asym})
    if (sub->count("--seed")) opts.seed = seed;

  if (*solve) return rliq::run_solve(opts, std::cerr);
  if (*verify) return rliq::run_verify(opts, std::cerr);
  if (*simulate) return rliq::run_simulate(opts, std::cerr);
  return rliq::run_asymptotics(opts, std::cerr);
}
