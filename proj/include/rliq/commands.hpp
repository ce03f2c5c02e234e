#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rliq {

/// Exit codes of every subcommand.
enum ExitCode : int { kExitOk = 0, kExitFailed = 1, kExitUsage = 2 };

struct RunOptions {
  std::string config_path;
  std::optional<std::string> out_dir;       // overrides output.dir
  std::optional<std::uint64_t> seed;        // overrides seed
  int threads = 1;
  bool force = false;                       // continue when assumption checks fail
  std::optional<std::string> solution_dir;  // reuse a solve instead of recomputing
  std::vector<double> thetas;               // overrides asymptotics.thetas
};

/// Each command writes its artifacts to the output directory, logs a short
/// summary to `log` and returns an ExitCode. Errors never escape.
int run_solve(const RunOptions& opts, std::ostream& log);
int run_verify(const RunOptions& opts, std::ostream& log);
int run_simulate(const RunOptions& opts, std::ostream& log);
int run_asymptotics(const RunOptions& opts, std::ostream& log);

}  // namespace rliq
