#include "rliq/params.hpp"

#include <cmath>

namespace rliq {

double RobustParams::theta_pow_alpha() const noexcept {
  return theta > 0.0 ? std::pow(theta, alpha) : 0.0;
}

RobustParams make_params(double p, double m, double T, double theta) {
  if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("p", "impact exponent must satisfy p > 1");
  if (!(m >= 2.0) || !std::isfinite(m)) throw DomainError("m", "penalty exponent must satisfy m >= 2");
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("T", "horizon must be positive");
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError("theta", "ambiguity level must be >= 0");

  RobustParams r;
  r.p = p;
  r.m = m;
  r.T = T;
  r.theta = theta;
  r.alpha = 1.0 / (m - 1.0);
  r.beta = 1.0 / (p - 1.0);
  r.epsilon = 1.0 - r.alpha / r.beta;
  r.a = std::pow(m - 1.0, m - 1.0) / std::pow(m, m);
  return r;
}

RobustParams with_theta(const RobustParams& params, double theta) {
  return make_params(params.p, params.m, params.T, theta);
}

}  // namespace rliq
