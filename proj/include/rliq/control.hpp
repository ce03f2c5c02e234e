#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "rliq/model.hpp"
#include "rliq/rng.hpp"
#include "rliq/value_solution.hpp"

namespace rliq {

/// xi* = (v(t, y) / eta(y))^beta x.
double optimal_xi(double t, const Point& y, double x, const ValueSolution& sol, const FactorModel& model,
                  const RobustParams& params);

/// vartheta* = theta^alpha (1+alpha) |sigma^* Dv|^(alpha-1) sigma^* Dv, 0 where sigma^* Dv = 0.
Point optimal_vartheta(double t, const Point& y, const ValueSolution& sol, const FactorModel& model,
                       const RobustParams& params);

enum class Measure { reference, worst_case };

/// Scalings of the feedback controls: xi = gamma xi*, vartheta = rho vartheta*.
struct Perturbation {
  double gamma = 1.0;
  double rho = 1.0;
};

struct SimulationSpec {
  double t0 = 0.0;
  Point y0;
  double x0 = 1.0;
  Measure measure = Measure::worst_case;
  std::size_t n_paths = 1000;
  int n_steps = 400;          // Euler steps on [t0, T - h_end]
  double step_ratio = 1.05;   // steps grow geometrically away from T by this ratio
  double h_end = 1e-4;        // as a fraction of T
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  int threads = 1;
  Perturbation perturbation;
  std::vector<double> probe_s;  // times to maturity at which X and v |X|^p are recorded
  bool keep_paths = false;
};

/// One simulated path. Costs are integrals over [t0, T]; the leg [T - h_end, T]
/// is closed by selling X(T - h_end) at a constant rate.
struct PathRecord {
  double impact = 0.0;    // int eta |xi|^p
  double risk = 0.0;      // int lambda |X|^p
  double penalty = 0.0;   // int (a/theta) |vartheta|^m |X|^p
  double logweight = 0.0; // log Doleans-Dade exponential of int vartheta dW (reference measure)
  double max_vartheta = 0.0;
  bool reflected = false;
  bool monotone = true;   // |X| nonincreasing
  double X_end = 0.0;     // X(T - h_end)
  std::vector<double> X_probe;
  std::vector<double> residual_probe;  // v(s, Y) |X|^p

  // full path, only with keep_paths
  std::vector<Point> Y;
  std::vector<double> X;
  std::vector<double> xi;
  std::vector<Point> vartheta;
  std::vector<double> running_cost;

  double cost() const noexcept { return impact + risk - penalty; }
};

struct PathBundle {
  SimulationSpec spec;
  std::vector<double> times;  // simulation grid on [t0, T - h_end]
  std::vector<PathRecord> paths;
  double reflected_fraction = 0.0;
};

/// Euler-Maruyama for Y with drift b (reference) or b + sigma rho vartheta* (worst case);
/// X by the exact exponential formula X_{k+1} = X_k (s_{k+1}/s_k)^(gamma g), g = (w/eta)^beta
/// averaged over the step ends. Costs are integrated exactly in s for the frozen coefficients.
PathBundle simulate(const FactorModel& model, const RobustParams& params, const ValueSolution& sol,
                    const SimulationSpec& spec);

enum class CostMode { direct, reweighted };

struct CostEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n_paths = 0;
  double impact = 0.0;
  double risk = 0.0;
  double penalty = 0.0;
  nlohmann::json to_json() const;
};

/// Sample mean of int (eta|xi|^p + lambda|X|^p - (a/theta)|vartheta|^m |X|^p); reweighted mode multiplies
/// each path by exp(logweight) and needs reference-measure paths.
CostEstimate estimate_cost(const PathBundle& paths, const RobustParams& params, CostMode mode);

/// Mean and standard error of exp(logweight).
SampleStats density_check(const PathBundle& paths);

struct SaddleEntry {
  std::string kind;  // "gamma" or "rho"
  double value = 1.0;
  CostEstimate estimate;
  double diff_mean = 0.0;    // J(perturbed) - J(optimal), common random numbers
  double diff_stderr = 0.0;
  bool holds = false;        // beyond 2 stderr in the saddle direction
  bool degenerate = false;   // rho family only: costs equal the optimal ones to rounding (vartheta* ~ 0)
};

struct SaddleReport {
  CostEstimate optimal;
  double v_grid = 0.0;  // v(t0, y0) |x0|^p
  double v_match_z = 0.0;
  double v_match_tol = 0.0;  // 3 stderr + 3 solver error estimates in v |x0|^p
  bool v_match = false;
  std::vector<SaddleEntry> entries;
  double reflected_fraction = 0.0;
  bool passed() const;
  nlohmann::json to_json() const;
};

/// J(xi*, rho vartheta*) <= J(xi*, vartheta*) <= J(gamma xi*, vartheta*) with common random numbers,
/// and J(xi*, vartheta*) against the grid value. Scalings of vartheta are skipped when theta = 0.
SaddleReport saddle_check(const FactorModel& model, const RobustParams& params, const ValueSolution& sol,
                          const SimulationSpec& base, const std::vector<double>& gammas,
                          const std::vector<double>& rhos);

/// Same, reusing worst-case paths under (xi*, vartheta*) simulated with the spec stored in `optimal`.
SaddleReport saddle_check(const FactorModel& model, const RobustParams& params, const ValueSolution& sol,
                          const PathBundle& optimal, const std::vector<double>& gammas,
                          const std::vector<double>& rhos);

}  // namespace rliq
