#include "rliq/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rliq/json_util.hpp"
#include "rliq/operators.hpp"

namespace rliq {

namespace {

double bracket_pow(const Point& y, double n) { return n == 0.0 ? 1.0 : std::pow(bracket(y), n); }

void require_window(double t, const BoundConstants& c, const RobustParams& params) {
  const double s = params.T - t;
  if (!(s > 0.0) || s > c.delta * (1.0 + 1e-12)) throw DomainError("t", "bounds are defined on [T - delta, T)");
}

}  // namespace

nlohmann::json BoundConstants::to_json() const {
  return {{"L", json_number(L)},          {"K", json_number(K)},
          {"delta0", json_number(delta0)}, {"delta1", json_number(delta1)},
          {"delta", json_number(delta)},   {"C0_hat", json_number(C0_hat)},
          {"Leta_norm", json_number(Leta_norm)}, {"n_growth", n_growth},
          {"inflation", inflation},        {"samples", samples},
          {"hhat_margin", json_number(hhat_margin)}};
}

BoundConstants compute_constants(const FactorModel& model, const RobustParams& params, const Box& box,
                                 const BoundsOptions& opts) {
  if (opts.n_samples < 1) throw DomainError("n_samples", "need at least one sample");
  if (!(opts.inflation >= 1.0)) throw DomainError("inflation", "must be >= 1");
  BoundConstants c;
  const double Cbar = model.constants.c_upper;
  const double alpha = params.alpha, beta = params.beta, eps = params.epsilon;
  c.inflation = opts.inflation;
  c.samples = opts.n_samples;
  c.n_growth = model.constants.n_growth(params.m);
  c.C0_hat = Cbar;
  c.K = (2.0 * Cbar + std::pow(2.0, 2.0 * alpha + 1.0) * std::pow(Cbar, alpha + 2.0)) / (1.0 + eps);
  c.delta1 = eps > 0.0 ? std::min(1.0, std::pow(1.0 / c.K, 1.0 / eps)) : (c.K <= 1.0 ? 1.0 : 0.0);

  double sup = 0.0;
  std::vector<Point> ys(opts.n_samples);
  for (int i = 0; i < opts.n_samples; ++i) {
    ys[i] = halton_point(box, static_cast<std::size_t>(i));
    sup = std::max(sup, std::abs(model.L_eta(ys[i]) / model.eta(ys[i])));
  }
  c.Leta_norm = opts.inflation * sup;
  c.delta0 = c.Leta_norm > 0.0 ? 1.0 / c.Leta_norm : std::numeric_limits<double>::infinity();
  const double shrink = 1.0 - std::pow((beta / 2.0 + 1.0) / (beta + 1.0), 1.0 / beta);
  c.delta = std::min(std::isinf(c.delta0) ? std::numeric_limits<double>::infinity() : c.delta0 * shrink, c.delta1);
  if (!(c.delta > 0.0)) throw DomainError("delta", "bound window is empty (K too large for eps)");

  const ScalarField weight = ScalarField::bracket_power(model.dim, 1.0, c.n_growth);
  const double grad_coeff = std::pow(2.0, alpha) * std::pow(Cbar, alpha + 1.0);
  auto margin_at = [&](double L, double s, const Point& y) {
    const FieldValue wv = weight.eval(y);
    const double e = std::exp(L * s);
    const double h = e * wv.value;
    const double eta = model.eta(y);
    return L * h - e * model.generator(wv, y) - grad_coeff * std::pow(e * wv.grad.norm(), alpha + 1.0) -
           model.lambda(y) + std::pow(h, beta + 1.0) / (beta * std::pow(eta, beta));
  };
  const int nt = std::max(opts.n_time_samples, 2);
  for (double L = 2.0 * c.C0_hat; L <= opts.L_max; L *= 2.0) {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nt; ++i) {
      const double s = c.delta * i / (nt - 1);
      for (const auto& y : ys) worst = std::min(worst, margin_at(L, s, y));
    }
    if (worst >= 0.0) {
      c.L = L;
      c.hhat_margin = worst;
      return c;
    }
  }
  throw DomainError("L", "no weight rate below L_max satisfies the h-hat inequality");
}

double hhat(double t, const Point& y, const BoundConstants& c, const RobustParams& params) {
  return std::exp(c.L * (params.T - t)) * bracket_pow(y, c.n_growth);
}

double subsolution_lower(double t, const Point& y, const BoundConstants& c, const FactorModel& model,
                         const RobustParams& params) {
  require_window(t, c, params);
  const double s = params.T - t;
  const double eta = model.eta(y);
  return eta * (1.0 - c.Leta_norm * s) / std::pow(s, 1.0 / params.beta);
}

double supersolution_upper(double t, const Point& y, const BoundConstants& c, const FactorModel& model,
                           const RobustParams& params) {
  require_window(t, c, params);
  const double s = params.T - t;
  const double eta = model.eta(y);
  return eta * (1.0 + c.K * std::pow(s, params.epsilon)) / std::pow(s, 1.0 / params.beta) + hhat(t, y, c, params);
}

nlohmann::json BoundCertificate::to_json(std::size_t max_listed) const {
  nlohmann::json j;
  j["passed"] = passed();
  j["checked_nodes"] = nodes.size();
  j["lower_violations"] = lower_violations;
  j["upper_violations"] = upper_violations;
  j["min_lower_margin"] = json_number(min_lower_margin);
  j["min_upper_margin"] = json_number(min_upper_margin);
  j["interval_C"] = json_number(interval_C);
  j["lower_positive"] = lower_positive;
  j["slack_factor"] = slack_factor;
  j["delta"] = json_number(delta);
  j["constants"] = constants.to_json();
  auto list = nlohmann::json::array();
  for (const auto& v : nodes) {
    if (v.lower_ok && v.upper_ok) continue;
    if (list.size() >= max_listed) break;
    list.push_back({{"t", v.t}, {"time_index", v.time_index}, {"space_index", v.space_index}, {"lower", v.lower},
                    {"value", v.value}, {"upper", v.upper}, {"slack", v.slack}, {"lower_ok", v.lower_ok},
                    {"upper_ok", v.upper_ok}});
  }
  j["violations"] = list;
  return j;
}

BoundCertificate verify_sandwich(const ValueSolution& sol, const BoundConstants& consts, const FactorModel& model,
                                 double slack_factor) {
  BoundCertificate cert;
  cert.slack_factor = slack_factor;
  cert.delta = consts.delta;
  cert.constants = consts;
  cert.min_lower_margin = std::numeric_limits<double>::infinity();
  cert.min_upper_margin = std::numeric_limits<double>::infinity();
  const RobustParams& P = sol.meta.params;
  const SpaceGrid& sg = sol.grid.space;
  std::vector<Point> pts(sg.size());
  std::vector<double> weight(sg.size());
  for (std::size_t k = 0; k < sg.size(); ++k) {
    pts[k] = sg.point(k);
    weight[k] = bracket_pow(pts[k], consts.n_growth);
  }
  for (std::size_t n = 0; n < sol.n_time(); ++n) {
    const double s = sol.s(n);
    if (s > consts.delta) continue;
    const double t = sol.grid.t_nodes[n];
    const double sb = std::pow(s, 1.0 / P.beta);
    const double slack = slack_factor * sol.meta.error_estimate / sb;
    for (std::size_t k = 0; k < sg.size(); ++k) {
      NodeVerdict v{n, k, t, 0.0, sol.v_node(n, k), 0.0, slack, true, true};
      v.lower = subsolution_lower(t, pts[k], consts, model, P);
      v.upper = supersolution_upper(t, pts[k], consts, model, P);
      v.lower_ok = v.lower <= v.value + slack;
      v.upper_ok = v.value <= v.upper + slack;
      cert.lower_violations += !v.lower_ok;
      cert.upper_violations += !v.upper_ok;
      cert.min_lower_margin = std::min(cert.min_lower_margin, v.value + slack - v.lower);
      cert.min_upper_margin = std::min(cert.min_upper_margin, v.upper + slack - v.value);
      cert.interval_C = std::max(cert.interval_C, sb * v.upper / weight[k]);
      if (!(v.lower > 0.0)) cert.lower_positive = false;
      cert.nodes.push_back(v);
    }
  }
  return cert;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

nlohmann::json RateFit::to_json() const {
  return {{"rate_v", json_number(rate_v)},   {"rate_Dv", json_number(rate_Dv)},
          {"degenerate_v", degenerate_v},     {"degenerate_Dv", degenerate_Dv},
          {"s", json_numbers(s)},             {"err_v", json_numbers(err_v)},
          {"err_Dv", json_numbers(err_Dv)}};
}

RateFit terminal_rate_fit(const ValueSolution& sol, const FactorModel& model, int n_dyadic) {
  const double T = sol.grid.T;
  const int k_max = static_cast<int>(std::floor(std::log2(T / (4.0 * sol.grid.tau_min))));
  if (k_max - n_dyadic + 1 < 1 || n_dyadic < 2) throw DomainError("grid", "too few dyadic times near T");
  const SpaceGrid& sg = sol.grid.space;
  DiscreteGenerator gen(model, sg);
  const Eigen::MatrixXd Deta = gen.gradient(sol.eta);
  const ScalarField weight = ScalarField::bracket_power(sg.dim(), 1.0, model.constants.n_growth(sol.meta.params.m));
  const Eigen::VectorXd wgt = sg.sample(weight);

  RateFit fit;
  std::vector<std::size_t> used;
  for (int k = k_max - n_dyadic + 1; k <= k_max; ++k) {
    const double target = T * std::pow(2.0, -k);
    std::size_t best = 0;
    for (std::size_t n = 0; n < sol.n_time(); ++n)
      if (std::abs(std::log(sol.s(n) / target)) < std::abs(std::log(sol.s(best) / target))) best = n;
    if (std::find(used.begin(), used.end(), best) != used.end()) continue;
    used.push_back(best);
    fit.s.push_back(sol.s(best));
    fit.err_v.push_back(((sol.w[best] - sol.eta).array().abs() / wgt.array()).maxCoeff());
    fit.err_Dv.push_back((sol.dw[best] - Deta).rowwise().norm().maxCoeff());
  }
  if (fit.s.size() < 6) throw DomainError("grid", "fewer than 6 distinct time nodes near T");
  const double scale = std::max(1.0, sol.eta.cwiseAbs().maxCoeff());
  auto rate = [&](const std::vector<double>& err, bool& degenerate) {
    degenerate = *std::max_element(err.begin(), err.end()) <= 1e-13 * scale ||
                 *std::min_element(err.begin(), err.end()) <= 0.0;
    return degenerate ? std::numeric_limits<double>::infinity() : loglog_slope(fit.s, err);
  };
  fit.rate_v = rate(fit.err_v, fit.degenerate_v);
  fit.rate_Dv = rate(fit.err_Dv, fit.degenerate_Dv);
  return fit;
}

}  // namespace rliq
