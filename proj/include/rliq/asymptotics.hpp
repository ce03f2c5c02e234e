#pragma once

#include <vector>

#include <json.hpp>

#include "rliq/solver.hpp"

namespace rliq {

/// First-order correction w1 in w_theta = w0 + theta^alpha w1 + o(theta^alpha).
struct CorrectionSolution {
  std::string method;  // "grid" or "feynman-kac"

  // grid method: w1 at every node of `grid` (time index in increasing t)
  SpaceTimeGrid grid;
  std::vector<Eigen::VectorXd> w1;

  // feynman-kac method: estimates at `points`
  std::vector<std::pair<double, Point>> points;  // (t, y)
  std::vector<double> estimate;
  std::vector<double> stderr_;
  double reflected_fraction = 0.0;  // share of paths that touched the box edge

  double C1 = 0.0;      // sup w1 / (T-t)^(1-alpha/beta)
  double min_w1 = 0.0;
  double beta = 1.0;

  double v1_node(std::size_t n, std::size_t k) const { return w1[n][k] / std::pow(grid.s(n), 1.0 / beta); }
};

/// s^(1/beta) |sigma^* Dv0|^(1+alpha) - (beta+1) v0^beta / (beta eta^beta) v + v / (beta s), s = T - t,
/// with v0, Dv0 interpolated from the benchmark solution.
double driver_f1(double t, const Point& y, double v, const ValueSolution& bench, const FactorModel& model,
                 const RobustParams& params);

/// Linear equation for w1 stepped with the same scheme and coefficients as
/// the nonlinear solve, linearized about w0 (the derivative of the discrete
/// map in theta^alpha). `bench` must live on `grid`.
CorrectionSolution solve_w1_grid(const ValueSolution& bench, const FactorModel& model, const RobustParams& params,
                                 const SpaceTimeGrid& grid, const SolverOptions& opts = {});

struct FeynmanKacOptions {
  double step_ratio = 1.05;  // path steps shrink geometrically near T by this ratio
  double max_dt = 0.0025;    // and never exceed max_dt
  int threads = 1;
  std::uint64_t stream = 1;
};

/// w1(t, y) = E[ int exp(int k) A s^(-alpha/beta) ds + exp(int k) w1(tau_min, Y) ] along Euler paths of Y,
/// k = [1 - (beta+1)(w0/eta)^beta] / (beta s), A = |sigma^* Dw0|^(1+alpha). Potential and source are
/// integrated exactly in s over each step with the coefficients averaged over its ends. Coefficients,
/// drift and volatility are taken from grid values by cubic interpolation in y and linear interpolation in t.
CorrectionSolution solve_w1_feynman_kac(const ValueSolution& bench, const FactorModel& model,
                                        const RobustParams& params, const std::vector<std::pair<double, Point>>& points,
                                        std::size_t n_paths, std::uint64_t seed, const FeynmanKacOptions& opts = {});

struct ProofConstants {
  double delta = 0.0;  // beta/(2(beta+1)) delta0, or T when delta0 is infinite
  double b = 0.0;
  double c = 0.0;
  double C0_tilde = 0.0;
  double L1 = 0.0;
  nlohmann::json to_json() const;
};

struct ExpansionReport {
  std::vector<double> thetas;          // decreasing
  std::vector<double> residual_norms;  // sup |w_theta - w0 - theta^alpha w1|
  std::vector<double> C1_tilde;        // per theta
  std::vector<double> L2;              // per theta, -inf if the fixed point fails
  std::vector<double> envelope;        // theta^(2alpha) max|L_i| (b T^(1/beta) + 1)
  std::vector<bool> within_envelope;
  std::vector<double> theta_threshold;
  std::vector<bool> above_threshold;   // flagged, not failed
  double fitted_order = 0.0;           // +inf when all residuals vanish
  bool degenerate = false;
  bool monotone = true;
  double tolerance = 0.0;              // slack used for the monotonicity test
  ProofConstants constants;
  double w1_min = 0.0;
  double w1_C1 = 0.0;

  bool order_in_band(double alpha) const;
  nlohmann::json to_json() const;
};

struct ExpansionInputs {
  const ValueSolution* bench = nullptr;       // reused if given
  const CorrectionSolution* w1 = nullptr;     // reused if given
};

ExpansionReport expansion_check(const FactorModel& model, const RobustParams& params_base,
                                const std::vector<double>& thetas, const SpaceTimeGrid& grid, const Box& sample_box,
                                const SolverOptions& opts = {}, ExpansionInputs inputs = {});

struct RefitResult {
  ValueSolution refit;
  double sup_gap = 0.0;        // sup |w_refit - w_theta| over the grid
  double tolerance = 0.0;      // grid tolerance of sol_theta
};

/// Re-solves the benchmark equation with lambda replaced by lambda + H(y, Dv_theta(t, y)).
/// On the near-terminal layer the extra risk is that of sol_theta itself,
/// so the refit starts from sol_theta at T - tau_min. On a grid other than
/// sol_theta's, Dv_theta is interpolated and the gap is taken at shared time nodes.
RefitResult equivalent_risk_refit(const ValueSolution& sol_theta, const FactorModel& model, const RobustParams& params,
                                  const SpaceTimeGrid& grid, const SolverOptions& opts = {});

/// The liquidation-rate field (v/eta)^beta is nondecreasing in theta iff w is.
/// For solutions ordered by increasing theta, returns the largest pointwise
/// decrease of w between neighbours; a value <= 0 means monotone.
double worst_rate_decrease(const std::vector<const ValueSolution*>& increasing_theta);

}  // namespace rliq
