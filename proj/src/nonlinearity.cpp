#include "rliq/nonlinearity.hpp"

namespace rliq {

double F0_source(double t, double u, const Point& Du, const LayerPoint& at, const RobustParams& params) {
  const double z = u / (t * at.eta);
  if (!(std::abs(z) <= 1.0)) throw DomainError("u", "iterate left the contraction ball (|z| > 1)");
  double out = t * at.L_eta + std::pow(t, params.p) * at.lambda - at.eta / params.beta * binomial_tail(z, params.beta);
  const double ta = params.theta_pow_alpha();
  if (ta > 0.0) {
    const Point q = at.sigma_star.cwiseProduct(Du) / t + at.sigma_D_eta;
    out += std::pow(t, params.epsilon) * hamiltonian(q, ta, params.alpha);
  }
  return out;
}

double nonlinearity_F(const Point& y, double v, const FactorModel& model, const RobustParams& params) {
  const double eta = model.eta(y);
  if (!(eta > 0.0)) throw DomainError("eta", "impact must be positive");
  return cost_F(model.lambda(y), eta, v, params.beta);
}

double hamiltonian_H(const Point& y, const Point& q, const FactorModel& model, const RobustParams& params) {
  return hamiltonian(model.sigma_diag(y).cwiseProduct(q), params.theta_pow_alpha(), params.alpha);
}

Point maximizer_vartheta(const Point& y, const Point& q, const FactorModel& model, const RobustParams& params) {
  return worst_case_density(model.sigma_diag(y).cwiseProduct(q), params.theta_pow_alpha(), params.alpha);
}

double F0_closed_form(double t, const Point& y, double u, const Point& Du, const FactorModel& model,
                      const RobustParams& params) {
  if (!(t > 0.0)) throw DomainError("t", "must be positive");
  const FieldValue e = model.eta.eval(y);
  if (!(e.value > 0.0)) throw DomainError("eta", "impact must be positive");
  const Point sig = model.sigma_diag(y);
  const LayerPoint at{model.generator(e, y), model.lambda(y), e.value, sig.cwiseProduct(e.grad), sig};
  return F0_source(t, u, Du, at, params);
}

}  // namespace rliq
