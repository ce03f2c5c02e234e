#pragma once

#include <vector>

#include "rliq/grid.hpp"
#include "rliq/model.hpp"

namespace rliq {

struct LayerOptions {
  int n_nodes = 80;       // time nodes on (0, width], geometric towards 0
  double ratio = 1.12;    // growth of consecutive layer steps
  int max_iterations = 60;
  double tol = 1e-12;     // on the Sigma-norm of successive iterates, relative to max(1, |u|_Sigma)
  double linear_tol = 1e-13;
};

/// Solution of the near-terminal equation for u, where w = eta + u / t and
/// t is the time to maturity.
struct TerminalLayerSolution {
  std::vector<double> t_nodes;          // 0 = t_0 < ... < t_N = width
  std::vector<Eigen::VectorXd> u;       // per node
  std::vector<Eigen::MatrixXd> du;      // per node
  int fixed_point_iters = 0;
  std::vector<double> contraction_residuals;  // Sigma-norm of u^{k+1} - u^k
  std::vector<double> contraction_ratios;     // residual_k / residual_{k-1}
  double sigma_norm = 0.0;              // sup_t (|u|/t^(1+eps) + |Du|/t^(1/2+eps))
  double max_abs_z = 0.0;               // max |u / (t eta)|
  double max_growth_ratio = 0.0;        // max |u| / (t eta)
  double R = 0.0;                       // ball radius (infinity if not certified)
  double width = 0.0;
  bool converged = false;
  bool contracted = true;               // every ratio after the first <= 1/2
  bool in_ball = true;                  // |u|_Sigma <= R

  /// w = eta + u/t at the last node.
  Eigen::VectorXd w_end(const Eigen::VectorXd& eta) const { return eta + u.back() / t_nodes.back(); }
};

/// Constants of the contraction window: R = 2(1 + M B0)(|L eta| + |lambda| + |sigma^* D eta|^(alpha+1)),
/// delta = min{(c/R)^(1/(eps-1/2)), 1}, with M measured from the discrete
/// semigroup on the grid.
struct ContractionWindow {
  double M = 0.0;
  double B0 = 0.0;
  double B1 = 0.0;
  double R = 0.0;
  double delta = 0.0;
};

ContractionWindow contraction_window(const FactorModel& model, const RobustParams& params, const SpaceGrid& grid);

/// Picard iteration u^{k+1} = Gamma[u^k], Gamma[u](t) = int_0^t P_{t-r} F0(r, u, Du) dr, each iterate
/// obtained by one forward implicit diffusion sweep over the layer nodes.
/// `R` may be infinity (no certification).
TerminalLayerSolution terminal_layer(const FactorModel& model, const RobustParams& params, const SpaceGrid& grid,
                                     double R, double width, const LayerOptions& opts = {});

}  // namespace rliq
