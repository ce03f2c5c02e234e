#include "rliq/terminal_layer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rliq/nonlinearity.hpp"
#include "rliq/operators.hpp"

namespace rliq {

namespace {

double sigma_norm(const std::vector<double>& t, const std::vector<Eigen::VectorXd>& u,
                  const std::vector<Eigen::MatrixXd>& du, double eps) {
  double out = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) {
    const double a = u[j].cwiseAbs().maxCoeff() / std::pow(t[j], 1.0 + eps);
    const double b = du[j].rowwise().norm().maxCoeff() / std::pow(t[j], 0.5 + eps);
    out = std::max(out, a + b);
  }
  return out;
}

Eigen::MatrixXd sigma_columns(const FactorModel& model, const SpaceGrid& grid) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(grid.size()), grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) s.row(static_cast<Eigen::Index>(k)) = model.sigma_diag(grid.point(k));
  return s;
}

}  // namespace

ContractionWindow contraction_window(const FactorModel& model, const RobustParams& params, const SpaceGrid& grid) {
  if (!params.regular()) throw DomainError("beta", "the contraction window needs beta > 2 alpha");
  ContractionWindow cw;
  const double eps = params.epsilon;
  cw.B0 = std::beta(1.0 + eps, 0.5);
  cw.B1 = std::beta(2.0 * eps + 0.5, 0.5);

  // M from the discrete semigroup applied to a unit step in each direction.
  DiscreteGenerator gen(model, grid);
  ShiftedSolver solver(gen, 1e-12);
  const Eigen::MatrixXd sig = sigma_columns(model, grid);
  for (int a = 0; a < grid.dim(); ++a) {
    const double mid = 0.5 * (grid.lo(a) + grid.hi(a));
    const double h = grid.spacing(a);
    Eigen::VectorXd phi(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) phi[k] = std::tanh((grid.point(k)[a] - mid) / h);
    const double smin = sig.col(a).cwiseAbs().minCoeff();
    const double width = 0.5 * (grid.hi(a) - grid.lo(a));
    for (double spread : {4.0, 8.0, 16.0}) {
      if (spread * h > 0.5 * width) continue;
      const double t = std::pow(spread * h / std::max(smin, 1e-12), 2);
      const int steps = 64;
      Eigen::VectorXd x = phi;
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
      for (int i = 0; i < steps; ++i) {
        Eigen::VectorXd rhs = x * (steps / t);
        solver.solve(steps / t, zero, rhs, x);
      }
      const double dsup = gen.gradient(x).col(a).cwiseAbs().maxCoeff();
      cw.M = std::max(cw.M, dsup * std::sqrt(t) / phi.cwiseAbs().maxCoeff());
    }
  }

  const Eigen::VectorXd eta = grid.sample(model.eta);
  const Eigen::VectorXd lam = grid.sample(model.lambda);
  const Eigen::VectorXd Leta = gen.apply(eta);
  const Eigen::MatrixXd sDeta = gen.gradient(eta).cwiseProduct(sig);
  const double norm_sum = Leta.cwiseAbs().maxCoeff() + lam.cwiseAbs().maxCoeff() +
                          std::pow(sDeta.rowwise().norm().maxCoeff(), params.alpha + 1.0);
  cw.R = 2.0 * (1.0 + cw.M * cw.B0) * norm_sum;
  cw.delta = cw.R > 0.0 ? std::min(std::pow(model.constants.c_lower / cw.R, 1.0 / (eps - 0.5)), 1.0) : 1.0;
  return cw;
}

TerminalLayerSolution terminal_layer(const FactorModel& model, const RobustParams& params, const SpaceGrid& grid,
                                     double R, double width, const LayerOptions& opts) {
  if (!(width > 0.0)) throw DomainError("delta", "layer width must be positive");
  if (opts.n_nodes < 2) throw DomainError("n_nodes", "need at least 2 layer nodes");
  if (params.robust() && !params.regular()) throw DomainError("beta", "theta > 0 needs beta > 2 alpha");
  if (std::isfinite(R)) {
    if (!params.regular()) throw DomainError("beta", "the contraction window needs beta > 2 alpha");
    const double window = std::min(std::pow(model.constants.c_lower / R, 1.0 / (params.epsilon - 0.5)), 1.0);
    if (width > window * (1.0 + 1e-12)) throw DomainError("delta", "layer width exceeds the contraction window");
  }

  DiscreteGenerator gen(model, grid);
  ShiftedSolver solver(gen, opts.linear_tol);
  const std::size_t n = grid.size();
  const Eigen::VectorXd eta = grid.sample(model.eta);
  const Eigen::VectorXd lam = grid.sample(model.lambda);
  const Eigen::VectorXd Leta = gen.apply(eta);
  const Eigen::MatrixXd sig = sigma_columns(model, grid);
  const Eigen::MatrixXd sDeta = gen.gradient(eta).cwiseProduct(sig);
  std::vector<LayerPoint> pts(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    pts[k] = LayerPoint{Leta[r], lam[r], eta[r], sDeta.row(r).transpose(), sig.row(r).transpose()};
  }

  TerminalLayerSolution out;
  out.R = R;
  out.width = width;
  const int N = opts.n_nodes;
  out.t_nodes.resize(N + 1);
  out.t_nodes[0] = 0.0;
  for (int j = 1; j <= N; ++j) out.t_nodes[j] = width * std::pow(opts.ratio, -(N - j));
  const auto& t = out.t_nodes;

  const Eigen::VectorXd zero_vec = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const Eigen::MatrixXd zero_mat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), grid.dim());
  std::vector<Eigen::VectorXd> u(N + 1, zero_vec);
  std::vector<Eigen::MatrixXd> du(N + 1, zero_mat);

  double prev_residual = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    std::vector<Eigen::VectorXd> un(N + 1, zero_vec);
    std::vector<Eigen::MatrixXd> dun(N + 1, zero_mat);
    Eigen::VectorXd F(static_cast<Eigen::Index>(n));
    for (int j = 1; j <= N; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        F[r] = F0_source(t[j], u[j][r], du[j].row(r).transpose(), pts[k], params);
      }
      const double h = t[j] - t[j - 1];
      double a0 = 1.0, a1 = -1.0, a2 = 0.0;
      if (j >= 2) {
        const double w = h / (t[j - 1] - t[j - 2]);
        a0 = (1.0 + 2.0 * w) / (1.0 + w);
        a1 = -(1.0 + w);
        a2 = w * w / (1.0 + w);
      }
      Eigen::VectorXd rhs = F - (a1 * un[j - 1]) / h;
      if (j >= 2) rhs -= (a2 * un[j - 2]) / h;
      un[j] = un[j - 1];
      solver.solve(a0 / h, zero_vec, rhs, un[j]);
      dun[j] = gen.gradient(un[j]);
    }
    std::vector<Eigen::VectorXd> diff(N + 1);
    std::vector<Eigen::MatrixXd> ddiff(N + 1);
    for (int j = 0; j <= N; ++j) {
      diff[j] = un[j] - u[j];
      ddiff[j] = dun[j] - du[j];
    }
    const double residual = sigma_norm(t, diff, ddiff, params.epsilon);
    out.contraction_residuals.push_back(residual);
    if (iter > 0) {
      const double ratio = prev_residual > 0.0 ? residual / prev_residual : 0.0;
      out.contraction_ratios.push_back(ratio);
      // round-off floor: ratios of residuals at machine precision are noise
      if (ratio > 0.5 && residual > 1e-13 * std::max(1.0, sigma_norm(t, un, dun, params.epsilon)))
        out.contracted = false;
    }
    prev_residual = residual;
    u = std::move(un);
    du = std::move(dun);
    out.fixed_point_iters = iter + 1;
    const double norm = sigma_norm(t, u, du, params.epsilon);
    if (residual <= opts.tol * std::max(1.0, norm)) {
      out.converged = true;
      break;
    }
  }

  out.sigma_norm = sigma_norm(t, u, du, params.epsilon);
  out.in_ball = !std::isfinite(R) || out.sigma_norm <= R;
  for (int j = 1; j <= N; ++j) {
    const double z = (u[j].array() / (t[j] * eta.array())).abs().maxCoeff();
    out.max_abs_z = std::max(out.max_abs_z, z);
  }
  out.max_growth_ratio = out.max_abs_z;
  out.u = std::move(u);
  out.du = std::move(du);
  return out;
}

}  // namespace rliq
