#include "rliq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rliq/nonlinearity.hpp"
#include "rliq/operators.hpp"

namespace rliq {

namespace {

Eigen::MatrixXd sigma_columns(const FactorModel& model, const SpaceGrid& grid) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(grid.size()), grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) s.row(static_cast<Eigen::Index>(k)) = model.sigma_diag(grid.point(k));
  return s;
}

std::vector<double> s_nodes(const SpaceTimeGrid& grid) {
  std::vector<double> s(grid.n_time());
  for (std::size_t j = 0; j < s.size(); ++j) s[j] = grid.s(grid.n_time() - 1 - j);
  return s;
}

SourceFn hjbi_source(const FactorModel& model, const RobustParams& params, const SpaceGrid& grid) {
  const Eigen::VectorXd lam = grid.sample(model.lambda);
  const Eigen::MatrixXd sig = sigma_columns(model, grid);
  const double ta = params.theta_pow_alpha();
  const double alpha = params.alpha, beta = params.beta;
  return [lam, sig, ta, alpha, beta](std::size_t, double s, const Eigen::VectorXd&, const Eigen::MatrixXd& dw,
                                     Eigen::VectorXd& G) {
    const double sl = std::pow(s, 1.0 / beta);
    const double sh = std::pow(s, -alpha / beta);
    G.resize(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
      const Point q = sig.row(k).transpose().cwiseProduct(dw.row(k).transpose());
      G[k] = sl * lam[k] + sh * hamiltonian(q, ta, alpha);
    }
  };
}

std::string node_location(const SpaceGrid& g, Eigen::Index k, double s) {
  std::ostringstream os;
  os << "at s = " << s << ", y = (" << g.point(static_cast<std::size_t>(k)).transpose() << ")";
  return os.str();
}

}  // namespace

Eigen::VectorXd terminal_initial_data(const FactorModel& model, const RobustParams& params, const SpaceTimeGrid& grid,
                                      const SolverOptions& opts, TerminalLayerSolution* layer_out) {
  TerminalLayerSolution layer = terminal_layer(model, params, grid.space, std::numeric_limits<double>::infinity(),
                                               grid.tau_min, opts.layer);
  if (!layer.converged) throw SolverError("near-terminal layer did not converge");
  const Eigen::VectorXd eta = grid.space.sample(model.eta);
  Eigen::VectorXd w0 = layer.w_end(eta);
  if (layer_out) *layer_out = std::move(layer);
  return w0;
}

ValueSolution solve_with_source(const FactorModel& model, const RobustParams& params, const SpaceTimeGrid& grid,
                                const Eigen::VectorXd& w_init, const SourceFn& source, const SolverOptions& opts,
                                const std::string& method) {
  check_grid(grid);
  const SpaceGrid& sg = grid.space;
  if (static_cast<std::size_t>(w_init.size()) != sg.size()) throw DomainError("w_init", "size differs from grid");
  DiscreteGenerator gen(model, sg);
  ShiftedSolver solver(gen, opts.linear_tol);
  const std::vector<double> s = s_nodes(grid);
  const std::size_t N = s.size();
  const Eigen::Index n = static_cast<Eigen::Index>(sg.size());
  const double beta = params.beta;

  ValueSolution sol;
  sol.grid = grid;
  sol.eta = sg.sample(model.eta);
  sol.meta.model_id = model.id;
  sol.meta.method = method;
  sol.meta.params = params;
  const Eigen::VectorXd& eta = sol.eta;
  const Eigen::ArrayXd inv_eta = eta.array().inverse();

  std::vector<Eigen::VectorXd> W(N);
  std::vector<Eigen::MatrixXd> DW(N);
  std::vector<double> lte(N, 0.0);
  W[0] = w_init;
  DW[0] = gen.gradient(W[0]);
  Eigen::VectorXd G_prev, G_cur;
  source(0, s[0], W[0], DW[0], G_cur);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd d(n), b(n), X(n);
  for (std::size_t j = 0; j + 1 < N; ++j) {
    const double h = s[j + 1] - s[j];
    const double s1 = s[j + 1];
    double a0 = 1.0, a1 = -1.0, a2 = 0.0, om = 0.0;
    if (j >= 1) {
      om = h / (s[j] - s[j - 1]);
      a0 = (1.0 + 2.0 * om) / (1.0 + om);
      a1 = -(1.0 + om);
      a2 = om * om / (1.0 + om);
    }
    Eigen::VectorXd rhs = -a1 * W[j] + h * (j >= 1 ? ((1.0 + om) * G_cur - om * G_prev).eval() : G_cur);
    if (j >= 1) rhs -= a2 * W[j - 1];

    X = j >= 1 ? (W[j] + om * (W[j] - W[j - 1])).eval() : W[j];
    if (X.minCoeff() <= 0.0) X = W[j];
    int it = 0;
    for (;; ++it) {
      if (it >= opts.max_newton)
        throw SolverError("Newton iteration did not converge " + node_location(sg, 0, s1));
      const Eigen::ArrayXd r = (X.array() * inv_eta).pow(beta);
      d = -((1.0 - (beta + 1.0) * r) / (beta * s1)).matrix();
      b = rhs / h + (X.array() * r / s1).matrix();
      Eigen::VectorXd Xn = X;
      const double res = solver.solve(a0 / h, d, b, Xn);
      sol.meta.max_linear_residual = std::max(sol.meta.max_linear_residual, res);
      const double upd = (Xn - X).cwiseAbs().maxCoeff();
      X = Xn;
      Eigen::Index kmin;
      if (X.minCoeff(&kmin) <= 0.0) throw SolverError("positivity of w lost " + node_location(sg, kmin, s1));
      if (upd <= opts.newton_tol * std::max(1.0, X.cwiseAbs().maxCoeff())) break;
    }
    sol.meta.max_newton_iterations = std::max(sol.meta.max_newton_iterations, it + 1);
    W[j + 1] = X;
    DW[j + 1] = gen.gradient(X);
    G_prev = std::move(G_cur);
    source(j + 1, s1, W[j + 1], DW[j + 1], G_cur);

    // Milne-type estimate against quadratic extrapolation of the last three levels.
    Eigen::VectorXd pred;
    if (j >= 1) {
      const double x0 = s[j - 1], x1 = s[j], x2 = s1;
      if (j >= 2) {
        const double xm = s[j - 2];
        const double l0 = (x2 - x0) * (x2 - x1) / ((xm - x0) * (xm - x1));
        const double l1 = (x2 - xm) * (x2 - x1) / ((x0 - xm) * (x0 - x1));
        const double l2 = (x2 - xm) * (x2 - x0) / ((x1 - xm) * (x1 - x0));
        pred = l0 * W[j - 2] + l1 * W[j - 1] + l2 * W[j];
      } else {
        pred = W[j] + (x2 - x1) / (x1 - x0) * (W[j] - W[j - 1]);
      }
    } else {
      pred = W[j];
    }
    lte[j + 1] = 2.0 / 11.0 * (W[j + 1] - pred).cwiseAbs().maxCoeff();
  }

  sol.w.resize(N);
  sol.dw.resize(N);
  sol.meta.lte.resize(N);
  sol.meta.sup_Dw.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t nt = N - 1 - j;
    sol.w[nt] = std::move(W[j]);
    sol.dw[nt] = std::move(DW[j]);
    sol.meta.lte[nt] = lte[j];
    sol.meta.error_estimate += lte[j];
    sol.meta.sup_Dw[nt] = sol.dw[nt].rowwise().norm().maxCoeff();
  }
  const std::size_t last = N - 1;
  sol.meta.terminal_constant =
      (sol.w[last] - eta).cwiseAbs().maxCoeff() / std::pow(grid.tau_min, std::max(params.epsilon, 0.0));
  return sol;
}

ValueSolution solve_singular(const FactorModel& model, const RobustParams& params, const SpaceTimeGrid& grid,
                             const SolverOptions& opts) {
  if (params.robust() && !params.regular())
    throw DomainError("beta", "theta > 0 needs beta > 2 alpha for the gradient term");
  check_grid(grid);
  TerminalLayerSolution layer;
  const Eigen::VectorXd w0 = terminal_initial_data(model, params, grid, opts, &layer);
  ValueSolution sol = solve_with_source(model, params, grid, w0, hjbi_source(model, params, grid.space), opts,
                                        params.robust() ? "singular" : "benchmark");
  sol.meta.layer_iterations = layer.fixed_point_iters;
  sol.meta.layer_sigma_norm = layer.sigma_norm;
  return sol;
}

ValueSolution solve_benchmark(const FactorModel& model, const RobustParams& params, const SpaceTimeGrid& grid,
                              const SolverOptions& opts) {
  return solve_singular(model, with_theta(params, 0.0), grid, opts);
}

std::vector<EquationResidual> equation_residuals(const ValueSolution& sol, const FactorModel& model,
                                                 const std::vector<std::pair<std::size_t, std::size_t>>& nodes) {
  const SpaceGrid& sg = sol.grid.space;
  DiscreteGenerator gen(model, sg);
  const RobustParams& P = sol.meta.params;
  const double ta = P.theta_pow_alpha();
  std::vector<EquationResidual> out;
  for (const auto& [n, k] : nodes) {
    if (n == 0 || n + 1 >= sol.n_time()) throw DomainError("node", "time index must be interior");
    const auto r = static_cast<Eigen::Index>(k);
    const double s = sol.s(n);
    const double sb = std::pow(s, 1.0 / P.beta);
    const double tm = sol.grid.t_nodes[n - 1], tp = sol.grid.t_nodes[n + 1];
    const double w = sol.w[n][r];
    const double wt = (sol.w[n + 1][r] - sol.w[n - 1][r]) / (tp - tm);
    const double Lw = gen.matrix().row(r).dot(sol.w[n]);
    const Point y = sg.point(k);
    const Point sig = model.sigma_diag(y);
    const Point dw = sol.dw[n].row(r).transpose();
    const double eta = sol.eta[r];
    const double lam = model.lambda(y);

    const double w_res = -wt - Lw - std::pow(s, -P.alpha / P.beta) * hamiltonian(sig.cwiseProduct(dw), ta, P.alpha) -
                         sb * lam + (std::pow(w, P.beta + 1.0) / std::pow(eta, P.beta) - w) / (P.beta * s);
    // v = w s^(-1/beta), s = T - t
    const double v = w / sb;
    const double vt = wt / sb + w / (P.beta * s * sb);
    const double Lv = Lw / sb;
    const Point dv = dw / sb;
    const double v_res = -vt - Lv - hamiltonian(sig.cwiseProduct(dv), ta, P.alpha) - cost_F(lam, eta, v, P.beta);
    out.push_back({v_res, w_res});
  }
  return out;
}

}  // namespace rliq
