#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rliq/grid.hpp"
#include "rliq/params.hpp"

namespace rliq {

/// Diagnostics attached to a grid solution.
struct SolverMeta {
  std::string model_id;
  std::string method;  // "singular", "benchmark", "refit"
  RobustParams params;
  double error_estimate = 0.0;     // accumulated local truncation estimate, sup norm in w
  std::vector<double> lte;         // per time node (t order); 0 at s = tau_min
  int max_newton_iterations = 0;
  double max_linear_residual = 0.0;
  double terminal_constant = 0.0;  // max_y |w - eta| / tau_min^eps at the node nearest T
  std::vector<double> sup_Dw;      // per time node
  int layer_iterations = 0;
  double layer_sigma_norm = 0.0;
};

/// Rescaled value w = (T-t)^(1/beta) v and its gradient on a space-time grid.
///
/// Arrays are indexed by time node (increasing t) and flat spatial index.
class ValueSolution {
 public:
  SpaceTimeGrid grid;
  std::vector<Eigen::VectorXd> w;
  std::vector<Eigen::MatrixXd> dw;  // rows: nodes, columns: dimensions
  Eigen::VectorXd eta;              // eta at the spatial nodes
  SolverMeta meta;

  std::size_t n_time() const noexcept { return grid.n_time(); }
  double s(std::size_t n) const noexcept { return grid.s(n); }
  double beta() const noexcept { return meta.params.beta; }

  double v_node(std::size_t n, std::size_t k) const { return w[n][k] / std::pow(s(n), 1.0 / beta()); }

  /// Locates t in the time nodes: t_nodes[n] <= t <= t_nodes[n+1], returns
  /// n and the linear weight of node n+1. DomainError outside [t_0, T - tau_min].
  std::pair<std::size_t, double> locate(double t) const;

  double w_at(double t, const Point& y) const;
  Point dw_at(double t, const Point& y) const;
  double v_at(double t, const Point& y) const;
  Point dv_at(double t, const Point& y) const;

  /// Index of the time node closest to t.
  std::size_t nearest_node(double t) const;
};

/// Dw and Dv = Dw / (T-t)^(1/beta) at every node.
struct GradientField {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::MatrixXd> dv;
  std::vector<double> sup_dw;  // per time node
  double sup_dw_all = 0.0;     // bounded uniformly in t
};

GradientField gradient(const ValueSolution& sol);

}  // namespace rliq
