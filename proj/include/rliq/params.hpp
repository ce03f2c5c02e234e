#pragma once

#include <stdexcept>
#include <string>

namespace rliq {

/// Thrown when an input violates a documented precondition. `field()` names
/// the offending quantity.
class DomainError : public std::domain_error {
 public:
  DomainError(std::string field, const std::string& what)
      : std::domain_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Exponents, horizon and ambiguity level of the robust liquidation problem,
/// together with the constants derived from (p, m).
struct RobustParams {
  double p = 2.0;      // impact exponent, > 1
  double m = 2.0;      // penalty exponent, >= 2
  double T = 1.0;      // horizon, > 0
  double theta = 0.0;  // ambiguity level, >= 0

  double alpha = 1.0;    // 1/(m-1)
  double beta = 1.0;     // 1/(p-1)
  double epsilon = 0.0;  // 1 - alpha/beta
  double a = 0.25;       // (m-1)^(m-1) / m^m

  /// beta > 2 alpha: required by every gradient-dependent operation.
  bool regular() const noexcept { return beta > 2.0 * alpha; }
  bool robust() const noexcept { return theta > 0.0; }
  /// theta^alpha, with 0^alpha = 0.
  double theta_pow_alpha() const noexcept;
};

/// Validates the raw parameters and computes the derived constants.
/// Throws DomainError naming the first violated field.
RobustParams make_params(double p, double m, double T, double theta);

/// Same (p, m, T) with another ambiguity level.
RobustParams with_theta(const RobustParams& params, double theta);

}  // namespace rliq
