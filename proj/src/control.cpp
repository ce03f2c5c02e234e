#include "rliq/control.hpp"

#include <algorithm>
#include <cmath>

#include "rliq/grid.hpp"
#include "rliq/json_util.hpp"
#include "rliq/nonlinearity.hpp"
#include "rliq/parallel.hpp"

namespace rliq {

namespace {

// (1 - r^c) / c for r in (0, 1], continuous at c = 0.
double power_integral(double log_r, double c) {
  const double x = c * log_r;
  return std::abs(x) < 1e-300 ? -log_r : -std::expm1(x) / c;
}

struct LocalState {
  double g = 0.0;    // (w/eta)^beta
  double v = 0.0;
  double eta = 0.0;
  double lambda = 0.0;
  Point vartheta;
};

LocalState local_state(double t, const Point& y, const ValueSolution& sol, const FactorModel& model,
                       const RobustParams& params) {
  const auto [n, f] = sol.locate(t);
  const Stencil st = interpolation_stencil(sol.grid.space, y);
  const double w = (1.0 - f) * st.apply(sol.w[n]) + f * st.apply(sol.w[n + 1]);
  const int d = sol.grid.space.dim();
  const double sb = std::pow(sol.grid.T - t, 1.0 / params.beta);
  LocalState out;
  out.eta = model.eta(y);
  out.lambda = model.lambda(y);
  out.g = std::pow(w / out.eta, params.beta);
  out.v = w / sb;
  if (params.robust()) {
    Point dv(d);
    for (int a = 0; a < d; ++a)
      dv[a] = ((1.0 - f) * st.apply(sol.dw[n].col(a)) + f * st.apply(sol.dw[n + 1].col(a))) / sb;
    out.vartheta = worst_case_density(model.sigma_diag(y).cwiseProduct(dv), params.theta_pow_alpha(), params.alpha);
  } else {
    out.vartheta = Point::Zero(d);
  }
  return out;
}

std::vector<double> simulation_s_grid(double s0, double h, int n_steps, double ratio,
                                      const std::vector<double>& probes) {
  std::vector<double> s = geometric_s_nodes(s0, h, n_steps + 1, ratio);
  for (double p : probes) {
    if (!(p > h && p < s0)) throw DomainError("probe_s", "probes must lie strictly inside (h_end, T - t0)");
    s.push_back(p);
  }
  std::sort(s.begin(), s.end(), std::greater<>());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

}  // namespace

double optimal_xi(double t, const Point& y, double x, const ValueSolution& sol, const FactorModel& model,
                  const RobustParams& params) {
  if (x == 0.0) return 0.0;
  return std::pow(sol.v_at(t, y) / model.eta(y), params.beta) * x;
}

Point optimal_vartheta(double t, const Point& y, const ValueSolution& sol, const FactorModel& model,
                       const RobustParams& params) {
  if (!params.robust()) return Point::Zero(y.size());
  if (!params.regular()) throw DomainError("beta", "vartheta* needs beta > 2 alpha");
  const Point q = model.sigma_diag(y).cwiseProduct(sol.dv_at(t, y));
  return worst_case_density(q, params.theta_pow_alpha(), params.alpha);
}

PathBundle simulate(const FactorModel& model, const RobustParams& params, const ValueSolution& sol,
                    const SimulationSpec& spec) {
  if (!std::isfinite(spec.x0)) throw DomainError("x0", "must be finite");
  if (!(spec.t0 < params.T)) throw DomainError("t0", "must be before T");
  if (spec.n_steps < 10) throw DomainError("n_steps", "need at least 10 steps");
  if (spec.y0.size() != model.dim) throw DomainError("y0", "dimension differs from the model");
  if (!(spec.perturbation.gamma > 0.0))
    throw DomainError("gamma", "the scaled rate must stay positive to liquidate by T");
  if (params.robust() && !params.regular()) throw DomainError("beta", "simulation needs beta > 2 alpha");
  const double T = params.T;
  const double h = spec.h_end * T;
  const double s0 = T - spec.t0;
  if (!(h < s0)) throw DomainError("h_end", "must end after t0");
  if (h < sol.grid.tau_min) throw DomainError("h_end", "ends inside the near-terminal layer of the solution");
  const std::vector<double> s = simulation_s_grid(s0, h, spec.n_steps, spec.step_ratio, spec.probe_s);
  const std::size_t M = s.size() - 1;
  std::vector<int> probe_at(s.size(), -1);
  for (std::size_t j = 0; j < spec.probe_s.size(); ++j)
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] == spec.probe_s[j]) probe_at[i] = static_cast<int>(j);

  PathBundle out;
  out.spec = spec;
  out.times.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.times[i] = T - s[i];
  out.paths.resize(spec.n_paths);

  const SpaceGrid& sg = sol.grid.space;
  const int d = model.dim;
  const double p = params.p, m = params.m;
  const double pen_coef = params.robust() ? params.a / params.theta : 0.0;
  const double gamma = spec.perturbation.gamma, rho = spec.perturbation.rho;
  const bool worst = spec.measure == Measure::worst_case;

  parallel_for(spec.n_paths, spec.threads, [&](std::size_t ip) {
    PathRecord& rec = out.paths[ip];
    rec.X_probe.assign(spec.probe_s.size(), 0.0);
    rec.residual_probe.assign(spec.probe_s.size(), 0.0);
    std::mt19937_64 rng = path_rng(spec.seed, spec.stream, ip);
    std::normal_distribution<double> normal;
    Point y = spec.y0;
    double X = spec.x0;
    LocalState a = local_state(out.times[0], y, sol, model, params);
    Point th = rho * a.vartheta;
    auto record = [&](std::size_t i, const LocalState& st, const Point& v_th) {
      if (probe_at[i] >= 0) {
        rec.X_probe[probe_at[i]] = X;
        rec.residual_probe[probe_at[i]] = st.v * std::pow(std::abs(X), p);
      }
      rec.max_vartheta = std::max(rec.max_vartheta, v_th.norm());
      if (spec.keep_paths) {
        rec.Y.push_back(y);
        rec.X.push_back(X);
        rec.xi.push_back(gamma * st.g / s[i] * X);
        rec.vartheta.push_back(v_th);
        rec.running_cost.push_back(rec.cost());
      }
    };
    record(0, a, th);
    Point dW(d);
    for (std::size_t i = 0; i < M; ++i) {
      const double dt = s[i] - s[i + 1];
      const double sq = std::sqrt(dt);
      const Point b = model.b(y);
      const Point sig = model.sigma_diag(y);
      for (int k = 0; k < d; ++k) dW[k] = sq * normal(rng);
      Point yn = y + b * dt + sig.cwiseProduct(dW);
      if (worst) {
        yn += sig.cwiseProduct(th) * dt;
      } else {
        rec.logweight += th.dot(dW) - 0.5 * th.squaredNorm() * dt;
      }
      for (int k = 0; k < d; ++k) {
        const double lo = sg.lo(k), hi = sg.hi(k);
        if (yn[k] < lo) {
          yn[k] = std::min(2.0 * lo - yn[k], hi);
          rec.reflected = true;
        } else if (yn[k] > hi) {
          yn[k] = std::max(2.0 * hi - yn[k], lo);
          rec.reflected = true;
        }
      }
      const LocalState bst = local_state(out.times[i + 1], yn, sol, model, params);
      const Point thb = rho * bst.vartheta;
      const double kappa = gamma * 0.5 * (a.g + bst.g);
      const double log_r = std::log(s[i + 1] / s[i]);
      const double Xp = std::pow(std::abs(X), p);
      const double eta_m = 0.5 * (a.eta + bst.eta), lam_m = 0.5 * (a.lambda + bst.lambda);
      const double pen_m = pen_coef * 0.5 * (std::pow(th.norm(), m) + std::pow(thb.norm(), m));
      // X(r) = X_i (r/s_i)^kappa on the step, r the time to maturity
      const double I_imp = std::pow(s[i], 1.0 - p) * power_integral(log_r, kappa * p - p + 1.0);
      const double I_run = s[i] * power_integral(log_r, kappa * p + 1.0);
      rec.impact += eta_m * std::pow(kappa, p) * Xp * I_imp;
      rec.risk += lam_m * Xp * I_run;
      rec.penalty += pen_m * Xp * I_run;
      const double Xn = X * std::exp(kappa * log_r);
      if (std::abs(Xn) > std::abs(X)) rec.monotone = false;
      X = Xn;
      y = yn;
      a = bst;
      th = thb;
      record(i + 1, a, th);
    }
    rec.X_end = X;
    // last leg [T - h, T] at the constant rate X / h
    const double Xp = std::pow(std::abs(X), p);
    rec.impact += a.eta * Xp * std::pow(h, 1.0 - p);
    rec.risk += a.lambda * Xp * h / (p + 1.0);
  });
  std::size_t hits = 0;
  for (const auto& r : out.paths) hits += r.reflected;
  out.reflected_fraction = spec.n_paths ? static_cast<double>(hits) / spec.n_paths : 0.0;
  return out;
}

nlohmann::json CostEstimate::to_json() const {
  return {{"mean", json_number(mean)}, {"stderr", json_number(stderr_)}, {"n_paths", n_paths},
          {"impact", json_number(impact)}, {"risk", json_number(risk)}, {"penalty", json_number(penalty)}};
}

CostEstimate estimate_cost(const PathBundle& paths, const RobustParams& params, CostMode mode) {
  if (mode == CostMode::reweighted && paths.spec.measure != Measure::reference)
    throw DomainError("mode", "reweighting needs reference-measure paths");
  const std::size_t n = paths.paths.size();
  std::vector<double> J(n), imp(n), risk(n), pen(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PathRecord& r = paths.paths[i];
    if (!params.robust() && r.max_vartheta != 0.0)
      throw DomainError("paths", "theta = 0 but the density generator is nonzero");
    const double w = mode == CostMode::reweighted ? std::exp(r.logweight) : 1.0;
    imp[i] = w * r.impact;
    risk[i] = w * r.risk;
    pen[i] = w * r.penalty;
    J[i] = imp[i] + risk[i] - pen[i];
  }
  CostEstimate e;
  const SampleStats st = sample_stats(J);
  e.mean = st.mean;
  e.stderr_ = st.stderr_;
  e.n_paths = n;
  e.impact = sample_stats(imp).mean;
  e.risk = sample_stats(risk).mean;
  e.penalty = sample_stats(pen).mean;
  return e;
}

SampleStats density_check(const PathBundle& paths) {
  std::vector<double> w(paths.paths.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(paths.paths[i].logweight);
  return sample_stats(w);
}

bool SaddleReport::passed() const {
  if (!v_match) return false;
  return std::all_of(entries.begin(), entries.end(), [](const SaddleEntry& e) { return e.holds; });
}

nlohmann::json SaddleReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["optimal"] = optimal.to_json();
  j["v_grid"] = json_number(v_grid);
  j["v_match_z"] = json_number(v_match_z);
  j["v_match_tol"] = json_number(v_match_tol);
  j["v_match"] = v_match;
  j["reflected_fraction"] = reflected_fraction;
  auto list = nlohmann::json::array();
  for (const auto& e : entries)
    list.push_back({{"kind", e.kind},
                    {"value", e.value},
                    {"estimate", e.estimate.to_json()},
                    {"diff_mean", json_number(e.diff_mean)},
                    {"diff_stderr", json_number(e.diff_stderr)},
                    {"holds", e.holds},
                    {"degenerate", e.degenerate}});
  j["perturbations"] = list;
  return j;
}

SaddleReport saddle_check(const FactorModel& model, const RobustParams& params, const ValueSolution& sol,
                          const SimulationSpec& base, const std::vector<double>& gammas,
                          const std::vector<double>& rhos) {
  SimulationSpec spec = base;
  spec.measure = Measure::worst_case;
  spec.perturbation = {};
  spec.keep_paths = false;
  return saddle_check(model, params, sol, simulate(model, params, sol, spec), gammas, rhos);
}

SaddleReport saddle_check(const FactorModel& model, const RobustParams& params, const ValueSolution& sol,
                          const PathBundle& opt, const std::vector<double>& gammas,
                          const std::vector<double>& rhos) {
  if (params.robust() && !params.regular()) throw DomainError("beta", "saddle check needs beta > 2 alpha");
  const SimulationSpec& spec = opt.spec;
  if (spec.measure != Measure::worst_case || spec.perturbation.gamma != 1.0 || spec.perturbation.rho != 1.0)
    throw DomainError("optimal", "paths must be simulated under (xi*, vartheta*) in the worst-case measure");
  SaddleReport rep;
  rep.optimal = estimate_cost(opt, params, CostMode::direct);
  rep.v_grid = sol.v_at(spec.t0, spec.y0) * std::pow(std::abs(spec.x0), params.p);
  rep.v_match_z = rep.optimal.stderr_ > 0.0 ? (rep.optimal.mean - rep.v_grid) / rep.optimal.stderr_
                                            : (rep.optimal.mean == rep.v_grid ? 0.0 : INFINITY);
  const double num_tol =
      3.0 * sol.meta.error_estimate / std::pow(params.T - spec.t0, 1.0 / params.beta) * std::pow(std::abs(spec.x0), params.p) +
      1e-12 * std::abs(rep.v_grid);
  rep.v_match_tol = 3.0 * rep.optimal.stderr_ + num_tol;
  rep.v_match = std::abs(rep.optimal.mean - rep.v_grid) <= rep.v_match_tol;
  rep.reflected_fraction = opt.reflected_fraction;

  auto run = [&](const std::string& kind, double value) {
    SimulationSpec ps = spec;
    ps.keep_paths = false;
    (kind == "gamma" ? ps.perturbation.gamma : ps.perturbation.rho) = value;
    const PathBundle pb = simulate(model, params, sol, ps);
    SaddleEntry e;
    e.kind = kind;
    e.value = value;
    e.estimate = estimate_cost(pb, params, CostMode::direct);
    std::vector<double> diff(pb.paths.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pb.paths[i].cost() - opt.paths[i].cost();
    const SampleStats st = sample_stats(diff);
    e.diff_mean = st.mean;
    e.diff_stderr = st.stderr_;
    const double round = 1e-12 * std::max(std::abs(rep.optimal.mean), 1e-300);
    e.degenerate = kind == "rho" && std::abs(st.mean) <= round && st.stderr_ <= round;
    e.holds = e.degenerate || (kind == "gamma" ? st.mean > 2.0 * st.stderr_ : st.mean < -2.0 * st.stderr_);
    rep.reflected_fraction = std::max(rep.reflected_fraction, pb.reflected_fraction);
    rep.entries.push_back(e);
  };
  for (double g : gammas) run("gamma", g);
  if (params.robust())
    for (double r : rhos) run("rho", r);
  return rep;
}

}  // namespace rliq
