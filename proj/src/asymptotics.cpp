#include "rliq/asymptotics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "rliq/bounds.hpp"
#include "rliq/json_util.hpp"
#include "rliq/nonlinearity.hpp"
#include "rliq/operators.hpp"
#include "rliq/parallel.hpp"
#include "rliq/rng.hpp"

namespace rliq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool same_grid(const SpaceTimeGrid& a, const SpaceTimeGrid& b) {
  if (a.T != b.T || a.tau_min != b.tau_min || a.t_nodes != b.t_nodes) return false;
  const SpaceGrid &x = a.space, &y = b.space;
  if (x.dim() != y.dim()) return false;
  for (int i = 0; i < x.dim(); ++i)
    if (x.n(i) != y.n(i) || x.lo(i) != y.lo(i) || x.hi(i) != y.hi(i)) return false;
  return true;
}

void require_regular(const RobustParams& params) {
  if (!params.regular()) throw DomainError("beta", "the expansion needs beta > 2 alpha");
}

// |sigma^* Dw|^(1+alpha) at every node.
Eigen::VectorXd gradient_power(const FactorModel& model, const SpaceGrid& sg, const Eigen::MatrixXd& dw,
                               double alpha) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(sg.size()));
  for (std::size_t k = 0; k < sg.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const Point q = model.sigma_diag(sg.point(k)).cwiseProduct(dw.row(r).transpose());
    out[r] = std::pow(q.norm(), alpha + 1.0);
  }
  return out;
}

// (1 - (beta+1)(w0/eta)^beta) / beta, the potential times s.
Eigen::VectorXd potential_g(const Eigen::VectorXd& w0, const Eigen::VectorXd& eta, double beta) {
  return ((1.0 - (beta + 1.0) * (w0.array() / eta.array()).pow(beta)) / beta).matrix();
}

double sup_norm(const Eigen::VectorXd& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

double driver_f1(double t, const Point& y, double v, const ValueSolution& bench, const FactorModel& model,
                 const RobustParams& params) {
  const double s = params.T - t;
  if (!(s > 0.0)) throw DomainError("t", "driver is singular at t = T");
  const double v0 = bench.v_at(t, y);
  const Point dv0 = bench.dv_at(t, y);
  const double eta = model.eta(y);
  const double beta = params.beta;
  const double src = std::pow(model.sigma_diag(y).cwiseProduct(dv0).norm(), 1.0 + params.alpha) *
                     std::pow(s, 1.0 / beta);
  return src - (beta + 1.0) * std::pow(v0 / eta, beta) / beta * v + v / (beta * s);
}

CorrectionSolution solve_w1_grid(const ValueSolution& bench, const FactorModel& model, const RobustParams& params,
                                 const SpaceTimeGrid& grid, const SolverOptions& opts) {
  require_regular(params);
  if (bench.meta.params.robust()) throw DomainError("bench", "must be a theta = 0 solution");
  if (!same_grid(bench.grid, grid)) throw DomainError("grid", "benchmark must live on the same grid");
  const SpaceGrid& sg = grid.space;
  DiscreteGenerator gen(model, sg);
  ShiftedSolver solver(gen, opts.linear_tol);
  const std::size_t N = grid.n_time();
  const double alpha = params.alpha, beta = params.beta;
  auto s_of = [&](std::size_t j) { return grid.s(N - 1 - j); };
  auto source = [&](std::size_t j) {
    return (std::pow(s_of(j), -alpha / beta) * gradient_power(model, sg, bench.dw[N - 1 - j], alpha)).eval();
  };

  std::vector<Eigen::VectorXd> W(N);
  W[0] = std::pow(grid.tau_min, params.epsilon) / (1.0 + params.epsilon) *
         gradient_power(model, sg, bench.dw[N - 1], alpha);
  Eigen::VectorXd S_prev, S_cur = source(0);
  Eigen::VectorXd X;
  for (std::size_t j = 0; j + 1 < N; ++j) {
    const double h = s_of(j + 1) - s_of(j);
    const double s1 = s_of(j + 1);
    double a0 = 1.0, a1 = -1.0, a2 = 0.0, om = 0.0;
    if (j >= 1) {
      om = h / (s_of(j) - s_of(j - 1));
      a0 = (1.0 + 2.0 * om) / (1.0 + om);
      a1 = -(1.0 + om);
      a2 = om * om / (1.0 + om);
    }
    Eigen::VectorXd rhs = -a1 * W[j] + h * (j >= 1 ? ((1.0 + om) * S_cur - om * S_prev).eval() : S_cur);
    if (j >= 1) rhs -= a2 * W[j - 1];
    const Eigen::VectorXd d = -potential_g(bench.w[N - 2 - j], bench.eta, beta) / s1;
    X = W[j];
    solver.solve(a0 / h, d, rhs / h, X);
    W[j + 1] = X;
    S_prev = std::move(S_cur);
    S_cur = source(j + 1);
  }

  CorrectionSolution out;
  out.method = "grid";
  out.grid = grid;
  out.beta = beta;
  out.w1.resize(N);
  out.min_w1 = kInf;
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t n = N - 1 - j;
    out.C1 = std::max(out.C1, W[j].maxCoeff() / std::pow(grid.s(n), params.epsilon));
    out.min_w1 = std::min(out.min_w1, W[j].minCoeff());
    out.w1[n] = std::move(W[j]);
  }
  return out;
}

CorrectionSolution solve_w1_feynman_kac(const ValueSolution& bench, const FactorModel& model,
                                        const RobustParams& params, const std::vector<std::pair<double, Point>>& points,
                                        std::size_t n_paths, std::uint64_t seed, const FeynmanKacOptions& opts) {
  require_regular(params);
  if (bench.meta.params.robust()) throw DomainError("bench", "must be a theta = 0 solution");
  if (n_paths < 2) throw DomainError("n_paths", "need at least two paths");
  if (!(opts.step_ratio > 1.0)) throw DomainError("step_ratio", "must exceed 1");
  if (!(opts.max_dt > 0.0)) throw DomainError("max_dt", "must be positive");
  const SpaceTimeGrid& grid = bench.grid;
  const SpaceGrid& sg = grid.space;
  const std::size_t N = grid.n_time();
  const int d = sg.dim();
  const double alpha = params.alpha, beta = params.beta;
  const double ab = alpha / beta;
  const double tau = grid.tau_min;

  // (g, A) packed per node so one stencil pass reads both
  const Eigen::Index size = static_cast<Eigen::Index>(sg.size());
  std::vector<Eigen::Matrix2Xd> gA(N, Eigen::Matrix2Xd(2, size));
  for (std::size_t n = 0; n < N; ++n) {
    gA[n].row(0) = potential_g(bench.w[n], bench.eta, beta).transpose();
    gA[n].row(1) = gradient_power(model, sg, bench.dw[n], alpha).transpose();
  }
  // drift then volatility, d each, per node
  Eigen::MatrixXd coef(2 * d, size);
  for (Eigen::Index k = 0; k < size; ++k) {
    const Point y = sg.point(static_cast<std::size_t>(k));
    coef.col(k).head(d) = model.b(y);
    coef.col(k).tail(d) = model.sigma_diag(y);
  }
  const double w1_tau_factor = std::pow(tau, params.epsilon) / (1.0 + params.epsilon);

  CorrectionSolution out;
  out.method = "feynman-kac";
  out.grid = grid;
  out.beta = beta;
  out.points = points;
  out.min_w1 = kInf;
  std::size_t reflected_total = 0;

  for (std::size_t ip = 0; ip < points.size(); ++ip) {
    const auto& [t0, y0] = points[ip];
    if (!sg.contains(y0)) throw DomainError("eval_points", "point outside the solved box");
    bench.locate(t0);
    // Path levels of s: capped steps, geometric near T, ending at tau_min.
    std::vector<double> s{grid.T - t0};
    while (s.back() > tau) {
      const double cur = s.back();
      double next = cur - std::min(opts.max_dt, cur * (1.0 - 1.0 / opts.step_ratio));
      if (next < tau * (1.0 + 1e-9) || cur - next < 1e-3 * (cur - tau)) next = tau;
      s.push_back(next);
    }
    const std::size_t M = s.size() - 1;
    // time interpolation: bench interval and weight of its right node at each level
    std::vector<std::size_t> seg(M + 1);
    std::vector<double> wt(M + 1);
    for (std::size_t i = 0; i <= M; ++i) {
      const auto [n, w] = bench.locate(grid.T - s[i]);
      seg[i] = n;
      wt[i] = w;
    }
    std::vector<double> log_ratio(M), s_pow(M), dt(M), sqrt_dt(M);
    for (std::size_t i = 0; i < M; ++i) {
      log_ratio[i] = std::log(s[i + 1] / s[i]);
      s_pow[i] = std::pow(s[i], 1.0 - ab);
      dt[i] = s[i] - s[i + 1];
      sqrt_dt[i] = std::sqrt(dt[i]);
    }
    auto at_time = [&](std::size_t i, const Stencil& st, double& gv, double& Av) {
      const std::size_t n = seg[i];
      const double w = (n + 1 >= N) ? 0.0 : wt[i];
      const double* f0 = gA[n].data();
      double a0 = 0.0, a1 = 0.0;
      if (w > 0.0) {
        const double* f1 = gA[n + 1].data();
        for (int c = 0; c < st.count; ++c) {
          const std::size_t k = 2 * st.idx[c];
          a0 += st.wt[c] * ((1.0 - w) * f0[k] + w * f1[k]);
          a1 += st.wt[c] * ((1.0 - w) * f0[k + 1] + w * f1[k + 1]);
        }
      } else {
        for (int c = 0; c < st.count; ++c) {
          const std::size_t k = 2 * st.idx[c];
          a0 += st.wt[c] * f0[k];
          a1 += st.wt[c] * f0[k + 1];
        }
      }
      gv = a0;
      Av = a1;
    };
    std::vector<double> value(n_paths);
    std::vector<char> reflected(n_paths, 0);
    parallel_for(n_paths, opts.threads, [&](std::size_t p) {
      std::mt19937_64 rng = path_rng(seed, opts.stream, ip * n_paths + p);
      std::normal_distribution<double> normal;
      Point y = y0;
      Stencil st = cubic_stencil(sg, y);
      double ga, Aa;
      at_time(0, st, ga, Aa);
      std::array<double, 4> bs{};
      const double* cf = coef.data();
      double E = 1.0, acc = 0.0;
      bool hit = false;
      for (std::size_t i = 0; i < M; ++i) {
        bs.fill(0.0);
        for (int c = 0; c < st.count; ++c) {
          const double* col = cf + 2 * d * st.idx[c];
          for (int e = 0; e < 2 * d; ++e) bs[e] += st.wt[c] * col[e];
        }
        for (int a = 0; a < d; ++a) {
          y[a] += bs[a] * dt[i] + bs[d + a] * sqrt_dt[i] * normal(rng);
          const double lo = sg.lo(a), hi = sg.hi(a);
          if (y[a] < lo) {
            y[a] = std::min(2.0 * lo - y[a], hi);
            hit = true;
          } else if (y[a] > hi) {
            y[a] = std::max(2.0 * hi - y[a], lo);
            hit = true;
          }
        }
        st = cubic_stencil(sg, y);
        double gb, Ab;
        at_time(i + 1, st, gb, Ab);
        const double gm = 0.5 * (ga + gb), Am = 0.5 * (Aa + Ab);
        const double c = 1.0 - gm - ab;
        const double lr = log_ratio[i];  // log(s_b / s_a) < 0
        const double integral = std::abs(c * lr) < 1e-300 ? -lr : -std::expm1(c * lr) / c;
        acc += E * Am * s_pow[i] * integral;
        E *= std::exp(-gm * lr);
        ga = gb;
        Aa = Ab;
      }
      acc += E * w1_tau_factor * Aa;
      value[p] = acc;
      reflected[p] = hit;
    });
    const SampleStats st = sample_stats(value);
    out.estimate.push_back(st.mean);
    out.stderr_.push_back(st.stderr_);
    out.min_w1 = std::min(out.min_w1, st.mean);
    out.C1 = std::max(out.C1, st.mean / std::pow(grid.T - t0, params.epsilon));
    for (char r : reflected) reflected_total += r;
  }
  if (!points.empty())
    out.reflected_fraction = static_cast<double>(reflected_total) / (static_cast<double>(n_paths) * points.size());
  return out;
}

nlohmann::json ProofConstants::to_json() const {
  return {{"delta", json_number(delta)}, {"b", json_number(b)}, {"c", json_number(c)},
          {"C0_tilde", json_number(C0_tilde)}, {"L1", json_number(L1)}};
}

bool ExpansionReport::order_in_band(double alpha) const {
  if (degenerate) return true;
  return fitted_order >= 2.0 * alpha - 0.3 && fitted_order <= 2.0 * alpha + 0.5;
}

nlohmann::json ExpansionReport::to_json() const {
  nlohmann::json j;
  j["thetas"] = json_numbers(thetas);
  j["residual_norms"] = json_numbers(residual_norms);
  j["C1_tilde"] = json_numbers(C1_tilde);
  j["L2"] = json_numbers(L2);
  j["envelope"] = json_numbers(envelope);
  j["within_envelope"] = within_envelope;
  j["theta_threshold"] = json_numbers(theta_threshold);
  j["above_threshold"] = above_threshold;
  j["fitted_order"] = json_number(fitted_order);
  j["degenerate"] = degenerate;
  j["monotone"] = monotone;
  j["tolerance"] = json_number(tolerance);
  j["constants"] = constants.to_json();
  j["w1_min"] = json_number(w1_min);
  j["w1_C1"] = json_number(w1_C1);
  return j;
}

ExpansionReport expansion_check(const FactorModel& model, const RobustParams& params_base,
                                const std::vector<double>& thetas, const SpaceTimeGrid& grid, const Box& sample_box,
                                const SolverOptions& opts, ExpansionInputs inputs) {
  require_regular(params_base);
  if (thetas.size() < 2) throw DomainError("thetas", "need at least two ambiguity levels");
  for (double th : thetas)
    if (!(th > 0.0)) throw DomainError("thetas", "levels must be positive");
  const RobustParams P0 = with_theta(params_base, 0.0);
  ValueSolution bench_own;
  if (!inputs.bench) bench_own = solve_benchmark(model, P0, grid, opts);
  const ValueSolution& bench = inputs.bench ? *inputs.bench : bench_own;
  CorrectionSolution w1_own;
  if (!inputs.w1) w1_own = solve_w1_grid(bench, model, P0, grid, opts);
  const CorrectionSolution& w1 = inputs.w1 ? *inputs.w1 : w1_own;

  const double alpha = params_base.alpha, beta = params_base.beta, eps = params_base.epsilon;
  const double T = grid.T;
  const double c_lo = model.constants.c_lower, C_hi = model.constants.c_upper;
  const SpaceGrid& sg = grid.space;
  const std::size_t N = grid.n_time();

  ExpansionReport rep;
  rep.thetas = thetas;
  std::sort(rep.thetas.begin(), rep.thetas.end(), std::greater<>());
  rep.w1_min = w1.min_w1;
  rep.w1_C1 = w1.C1;

  // Constants of the sandwich u_i = v0 + theta^alpha v1 + theta^(2alpha) L_i (b + s^(-1/beta)).
  BoundsOptions bopt;
  double sup_ratio = 0.0;
  for (int i = 0; i < bopt.n_samples; ++i) {
    const Point y = halton_point(sample_box, static_cast<std::size_t>(i));
    sup_ratio = std::max(sup_ratio, std::abs(model.L_eta(y) / model.eta(y)));
  }
  const double delta0 = sup_ratio > 0.0 ? 1.0 / (bopt.inflation * sup_ratio) : kInf;
  ProofConstants& pc = rep.constants;
  pc.delta = std::isinf(delta0) ? T : std::min(T, beta / (2.0 * (beta + 1.0)) * delta0);
  pc.b = std::pow(C_hi, beta) / ((beta + 1.0) * std::pow(c_lo, beta) * std::pow(pc.delta, 1.0 / beta));
  pc.c = std::min(0.5, (beta + 1.0) * std::pow(c_lo, beta) / (beta * std::pow(C_hi, beta)));

  DiscreteGenerator gen(model, sg);
  std::vector<Eigen::MatrixXd> dw1(N);
  for (std::size_t n = 0; n < N; ++n) dw1[n] = gen.gradient(w1.w1[n]);
  for (std::size_t n = 0; n < N; ++n) {
    const double s = grid.s(n);
    const double sb = std::pow(s, 1.0 / beta);
    for (std::size_t k = 0; k < sg.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      const double g0 = bench.dw[n].row(r).norm() / sb;
      const double g1 = dw1[n].row(r).norm() / sb;
      const double g01 = (bench.dw[n].row(r) + dw1[n].row(r)).norm() / sb;
      const double val = std::pow(C_hi, alpha) * (std::pow(g0, alpha) + std::pow(g01, alpha)) * g1 *
                         std::pow(s, 1.0 / beta + 1.0) / std::pow(T, eps);
      pc.C0_tilde = std::max(pc.C0_tilde, val);
    }
  }
  pc.L1 = 1.01 * pc.C0_tilde * std::pow(T, eps) / pc.c;

  // C1-tilde(theta, L2): bound on the quadratic remainder of the reaction term.
  auto C1_tilde = [&](double theta, double L2) {
    const double ta = std::pow(theta, alpha);
    double sup = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double s = grid.s(n);
      const double sb = std::pow(s, 1.0 / beta);
      for (std::size_t k = 0; k < sg.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        const double eta = bench.eta[r];
        const double v0 = bench.w[n][r] / sb, v1 = w1.w1[n][r] / sb;
        const double zeta = beta >= 1.0 ? v0 + ta * std::max(v1, 0.0) : c_lo / (2.0 * sb);
        const double spread = std::abs(v1) + ta * std::abs(L2) * (pc.b + 1.0 / sb);
        const double val = std::pow(s, 1.0 / beta + 1.0) * (beta + 1.0) / (2.0 * std::pow(eta, beta)) *
                           std::pow(zeta, beta - 1.0) * spread * spread;
        sup = std::max(sup, val);
      }
    }
    return sup;
  };

  rep.tolerance = 0.0;
  for (double theta : rep.thetas) {
    const RobustParams Pt = with_theta(params_base, theta);
    const ValueSolution sol = solve_singular(model, Pt, grid, opts);
    const double ta = Pt.theta_pow_alpha();
    double res = 0.0;
    for (std::size_t n = 0; n < N; ++n) res = std::max(res, sup_norm(sol.w[n] - bench.w[n] - ta * w1.w1[n]));
    rep.residual_norms.push_back(res);
    rep.tolerance = std::max(rep.tolerance, sol.meta.error_estimate + bench.meta.error_estimate);

    double L2 = -1.01 * pc.C0_tilde * std::pow(T, eps) / pc.c;
    double C1 = 0.0;
    bool ok = false;
    for (int it = 0; it < 200; ++it) {
      C1 = C1_tilde(theta, L2);
      const double next = -1.01 * (C1 + pc.C0_tilde * std::pow(T, eps)) / pc.c;
      if (!std::isfinite(next) || std::abs(next) > 1e12) break;
      if (std::abs(next - L2) <= 1e-10 * std::abs(next)) {
        L2 = next;
        ok = true;
        break;
      }
      L2 = next;
    }
    if (!ok) {
      L2 = -kInf;
      C1 = kInf;
    }
    rep.C1_tilde.push_back(C1);
    rep.L2.push_back(L2);
    const double Lhat = std::max(std::abs(pc.L1), std::abs(L2));
    const double env = std::pow(theta, 2.0 * alpha) * Lhat * (pc.b * std::pow(T, 1.0 / beta) + 1.0);
    rep.envelope.push_back(env);
    rep.within_envelope.push_back(res <= env + rep.tolerance);
    const double thr =
        ok ? std::min(1.0, std::pow(c_lo / (2.0 * std::abs(L2) * (std::pow(T, 1.0 / beta) * pc.b + 1.0)),
                                    1.0 / (2.0 * alpha)))
           : 0.0;
    rep.theta_threshold.push_back(thr);
    rep.above_threshold.push_back(theta >= thr);
  }

  for (std::size_t i = 0; i + 1 < rep.thetas.size(); ++i)
    if (rep.residual_norms[i + 1] > rep.residual_norms[i] + rep.tolerance) rep.monotone = false;
  const double scale = std::max(1.0, sup_norm(bench.eta));
  const double rmax = *std::max_element(rep.residual_norms.begin(), rep.residual_norms.end());
  const double rmin = *std::min_element(rep.residual_norms.begin(), rep.residual_norms.end());
  rep.degenerate = rmax <= 1e-13 * scale || rmin <= 0.0;
  rep.fitted_order = rep.degenerate ? kInf : loglog_slope(rep.thetas, rep.residual_norms);
  return rep;
}

RefitResult equivalent_risk_refit(const ValueSolution& sol_theta, const FactorModel& model, const RobustParams& params,
                                  const SpaceTimeGrid& grid, const SolverOptions& opts) {
  check_grid(grid);
  const RobustParams& P = sol_theta.meta.params;
  if (P.robust()) require_regular(P);
  const SpaceGrid& sg = grid.space;
  const std::size_t N = grid.n_time();
  const bool same = same_grid(sol_theta.grid, grid);
  const double alpha = P.alpha, beta = P.beta, ta = P.theta_pow_alpha();

  // Dw_theta at the refit nodes, in s order.
  std::vector<Eigen::MatrixXd> dw(N);
  Eigen::VectorXd w_init(static_cast<Eigen::Index>(sg.size()));
  for (std::size_t j = 0; j < N; ++j) {
    const std::size_t n = N - 1 - j;
    if (same) {
      dw[j] = sol_theta.dw[n];
      continue;
    }
    dw[j].resize(static_cast<Eigen::Index>(sg.size()), sg.dim());
    for (std::size_t k = 0; k < sg.size(); ++k)
      dw[j].row(static_cast<Eigen::Index>(k)) = sol_theta.dw_at(grid.t_nodes[n], sg.point(k)).transpose();
  }
  if (same) {
    w_init = sol_theta.w[N - 1];
  } else {
    for (std::size_t k = 0; k < sg.size(); ++k)
      w_init[static_cast<Eigen::Index>(k)] = sol_theta.w_at(grid.t_nodes[N - 1], sg.point(k));
  }

  const Eigen::VectorXd lam = sg.sample(model.lambda);
  Eigen::MatrixXd sig(static_cast<Eigen::Index>(sg.size()), sg.dim());
  for (std::size_t k = 0; k < sg.size(); ++k) sig.row(static_cast<Eigen::Index>(k)) = model.sigma_diag(sg.point(k));
  SourceFn source = [&](std::size_t j, double s, const Eigen::VectorXd&, const Eigen::MatrixXd&, Eigen::VectorXd& G) {
    const double sl = std::pow(s, 1.0 / beta);
    const double sh = std::pow(s, -alpha / beta);
    G.resize(lam.size());
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
      const Point q = sig.row(k).transpose().cwiseProduct(dw[j].row(k).transpose());
      G[k] = sl * lam[k] + sh * hamiltonian(q, ta, alpha);
    }
  };
  RefitResult out;
  out.refit = solve_with_source(model, with_theta(params, 0.0), grid, w_init, source, opts, "refit");
  out.tolerance = sol_theta.meta.error_estimate;
  // on a different grid, compare where the time nodes coincide, else interpolate everywhere
  const auto& tn = sol_theta.grid.t_nodes;
  auto shared = [&](double t) {
    const auto it = std::lower_bound(tn.begin(), tn.end(), t - 1e-12 * grid.T);
    return it != tn.end() && std::abs(*it - t) <= 1e-12 * grid.T;
  };
  bool any_shared = false;
  for (std::size_t n = 0; n < N && !same; ++n) any_shared = any_shared || shared(grid.t_nodes[n]);
  for (std::size_t n = 0; n < N; ++n) {
    if (same) {
      out.sup_gap = std::max(out.sup_gap, sup_norm(out.refit.w[n] - sol_theta.w[n]));
      continue;
    }
    if (any_shared && !shared(grid.t_nodes[n])) continue;
    for (std::size_t k = 0; k < sg.size(); ++k)
      out.sup_gap = std::max(out.sup_gap, std::abs(out.refit.w[n][static_cast<Eigen::Index>(k)] -
                                                   sol_theta.w_at(grid.t_nodes[n], sg.point(k))));
  }
  return out;
}

double worst_rate_decrease(const std::vector<const ValueSolution*>& increasing_theta) {
  if (increasing_theta.size() < 2) throw DomainError("solutions", "need at least two solutions");
  double worst = -kInf;
  for (std::size_t i = 0; i + 1 < increasing_theta.size(); ++i) {
    const ValueSolution& a = *increasing_theta[i];
    const ValueSolution& b = *increasing_theta[i + 1];
    if (!same_grid(a.grid, b.grid)) throw DomainError("solutions", "rate comparison needs a common grid");
    for (std::size_t n = 0; n < a.n_time(); ++n) worst = std::max(worst, (a.w[n] - b.w[n]).maxCoeff());
  }
  return worst;
}

}  // namespace rliq
