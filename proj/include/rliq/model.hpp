#pragma once

#include <string>
#include <vector>

#include "rliq/field.hpp"
#include "rliq/params.hpp"

namespace rliq {

/// Constants of the growth assumptions on the cost coefficients.
struct GrowthConstants {
  double c_lower = 1.0;  // lower constant for eta
  double c_upper = 1.0;  // common upper constant for all bounds
  double k0 = 1.0;       // growth exponent parameter in (0, 1]

  /// n = (1 - k0) m, the polynomial growth order of the value function.
  double n_growth(double m) const noexcept { return (1.0 - k0) * m; }
};

/// Factor dynamics dY = b(Y) dt + sigma(Y) dW and cost coefficients eta, lambda.
///
/// The volatility is diagonal (n = d driving Brownian motions); each diagonal
/// entry is its own scalar field.
struct FactorModel {
  std::string id;
  int dim = 1;
  std::vector<ScalarField> drift;  // b_i
  std::vector<ScalarField> vol;    // sigma_ii
  ScalarField eta;
  ScalarField lambda;
  GrowthConstants constants;
  bool declares_bounded_costs = true;  // eta, lambda bounded with bounded gradient
  bool declares_elliptic = true;       // sigma sigma^* uniformly positive definite

  Point b(const Point& y) const;
  SmallMat b_jacobian(const Point& y) const;
  /// Diagonal of sigma.
  Point sigma_diag(const Point& y) const;
  SmallMat sigma(const Point& y) const;

  /// Generator L f = 1/2 tr(sigma sigma^* D^2 f) + <b, Df> applied to a field.
  double generator(const ScalarField& f, const Point& y) const;
  double generator(const FieldValue& f, const Point& y) const;
  double L_eta(const Point& y) const { return generator(eta, y); }

  nlohmann::json to_json() const;
};

/// Checks structural consistency (dimensions, non-empty fields). Throws DomainError.
void check_model(const FactorModel& model);

/// Constant coefficients: eta, lambda, drift and diagonal volatility all constant.
FactorModel constant_model(int dim, double eta, double lambda, const Point& drift, const Point& sigma);
inline FactorModel constant_model(double eta, double lambda) {
  return constant_model(1, eta, lambda, Point::Zero(1), Point::Ones(1));
}

/// Two-factor example: dY1 = -Y1 dt + dW1 (liquidity), dY2 = mu dt + sigma dW2
/// (volatility driver), eta(y) = tanh(-y1) + 2, lambda(y) = sigma_tilde_sq(y2).
/// `sigma_tilde_sq` must be a bounded, nonnegative field of y2 only with
/// bounded gradient; otherwise DomainError.
FactorModel example_ex1_model(double mu, double sigma, const ScalarField& sigma_tilde_sq);
/// Default squared stochastic volatility 0.5 + 0.3 tanh(y2).
ScalarField default_sigma_tilde_sq();

/// One-factor analogue of the liquidity part: dY = -kappa Y dt + sigma dW,
/// eta(y) = tanh(-y) + 2, lambda constant.
FactorModel ou_liquidity_model(double kappa, double sigma, double lambda);

/// Builds any model from its JSON description (as written by to_json).
FactorModel model_from_json(const nlohmann::json& spec);

}  // namespace rliq
