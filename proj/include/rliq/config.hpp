#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rliq/asymptotics.hpp"
#include "rliq/bounds.hpp"
#include "rliq/control.hpp"
#include "rliq/solver.hpp"

namespace rliq {

/// Malformed or invalid configuration. `field()` is the dotted key path,
/// `line()` the 1-based line in the file (0 when unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& what);
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_;
  int line_;
};

struct GridConfig {
  Box box;
  std::vector<int> n_space;
  int n_time = 200;
  double tau_min = 1e-4;
  double step_ratio = 1.1;
};

struct VerifyConfig {
  BoundsOptions bounds;
  double slack_factor = 3.0;
  int n_dyadic = 8;
  double rate_margin = 0.15;
};

struct SimulationConfig {
  SimulationSpec spec;
  std::vector<double> gammas{0.8, 1.25};
  std::vector<double> rhos{0.5, 1.5};
  std::size_t dump_paths = 0;  // full paths written for the first dump_paths paths
};

struct AsymptoticsConfig {
  std::vector<double> thetas;
  std::size_t fk_paths = 0;                              // 0 skips the Monte Carlo cross-check
  std::vector<std::pair<double, Point>> fk_points;       // (s, y), snapped to grid nodes
  FeynmanKacOptions fk;
  bool refit = true;
};

struct ExperimentConfig {
  std::string text;  // the file as read
  nlohmann::json model_spec;
  FactorModel model;
  RobustParams params;
  GridConfig grid;
  SolverOptions solver;
  int assumption_samples = 1000;
  Box assumption_box;
  VerifyConfig verify;
  SimulationConfig simulation;
  AsymptoticsConfig asymptotics;
  std::string output_dir = "out";
  std::uint64_t seed = 1;

  SpaceTimeGrid make_space_time_grid() const;
  /// FNV-1a hash of everything a solution depends on (model, params, grid, solver).
  std::uint64_t solution_hash() const;
  nlohmann::json solution_key() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t x);

}  // namespace rliq
