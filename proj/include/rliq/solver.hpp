#pragma once

#include <functional>
#include <stdexcept>

#include "rliq/model.hpp"
#include "rliq/terminal_layer.hpp"
#include "rliq/value_solution.hpp"

namespace rliq {

/// Non-convergence or loss of positivity inside a solve.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  int max_newton = 20;
  double newton_tol = 1e-13;  // max |update| relative to max(1, |w|)
  double linear_tol = 1e-13;
  LayerOptions layer;
};

/// Explicit source of the time stepper at time-to-maturity s. Receives the
/// s-ordered step index, the current iterate and its gradient; writes G.
using SourceFn =
    std::function<void(std::size_t step, double s, const Eigen::VectorXd& w, const Eigen::MatrixXd& dw, Eigen::VectorXd& G)>;

/// Solves the rescaled HJBI equation in s = T - t,
///   d_s w = L w + s^(-alpha/beta) H(y, Dw) + s^(1/beta) lambda - [w^(beta+1)/eta^beta - w] / (beta s),
/// from w = eta + u(tau_min)/tau_min (near-terminal layer) at s = tau_min up to s = T.
///
/// Variable-step IMEX BDF2 (backward Euler on the first step): diffusion and
/// reaction implicit with Newton iterations, lambda and H extrapolated.
ValueSolution solve_singular(const FactorModel& model, const RobustParams& params, const SpaceTimeGrid& grid,
                             const SolverOptions& opts = {});

/// The same pipeline with H forced to 0.
ValueSolution solve_benchmark(const FactorModel& model, const RobustParams& params, const SpaceTimeGrid& grid,
                              const SolverOptions& opts = {});

/// Benchmark equation with lambda replaced by the explicit `source`
/// (which must include the s^(1/beta) lambda term) and initial data `w_init`.
ValueSolution solve_with_source(const FactorModel& model, const RobustParams& params, const SpaceTimeGrid& grid,
                                const Eigen::VectorXd& w_init, const SourceFn& source, const SolverOptions& opts,
                                const std::string& method);

/// Initial data at s = tau_min from the near-terminal layer.
Eigen::VectorXd terminal_initial_data(const FactorModel& model, const RobustParams& params, const SpaceTimeGrid& grid,
                                      const SolverOptions& opts, TerminalLayerSolution* layer_out = nullptr);

struct EquationResidual {
  double v_residual;  // -v_t - L v - H(y, Dv) - F(y, v)
  double w_residual;  // the rescaled equation in w
};

/// Residuals of both forms of the equation at interior nodes (n, k), from
/// discrete time and space differences of the solution. The time derivative
/// of v is formed from that of w by the chain rule.
std::vector<EquationResidual> equation_residuals(const ValueSolution& sol, const FactorModel& model,
                                                 const std::vector<std::pair<std::size_t, std::size_t>>& nodes);

}  // namespace rliq
