#include "rliq/model.hpp"

#include <algorithm>
#include <cmath>

namespace rliq {

Point FactorModel::b(const Point& y) const {
  Point out(dim);
  for (int i = 0; i < dim; ++i) out[i] = drift[i](y);
  return out;
}

SmallMat FactorModel::b_jacobian(const Point& y) const {
  SmallMat J(dim, dim);
  for (int i = 0; i < dim; ++i) J.row(i) = drift[i].gradient(y).transpose();
  return J;
}

Point FactorModel::sigma_diag(const Point& y) const {
  Point out(dim);
  for (int i = 0; i < dim; ++i) out[i] = vol[i](y);
  return out;
}

SmallMat FactorModel::sigma(const Point& y) const { return sigma_diag(y).asDiagonal(); }

double FactorModel::generator(const FieldValue& f, const Point& y) const {
  double out = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double s = vol[i](y);
    out += 0.5 * s * s * f.hess(i, i) + drift[i](y) * f.grad[i];
  }
  return out;
}

double FactorModel::generator(const ScalarField& f, const Point& y) const { return generator(f.eval(y), y); }

nlohmann::json FactorModel::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["dim"] = dim;
  j["drift"] = nlohmann::json::array();
  j["vol"] = nlohmann::json::array();
  for (const auto& f : drift) j["drift"].push_back(f.to_json());
  for (const auto& f : vol) j["vol"].push_back(f.to_json());
  j["eta"] = eta.to_json();
  j["lambda"] = lambda.to_json();
  j["constants"] = {{"c_lower", constants.c_lower}, {"c_upper", constants.c_upper}, {"k0", constants.k0}};
  j["declares"] = {{"bounded_costs", declares_bounded_costs}, {"elliptic", declares_elliptic}};
  return j;
}

void check_model(const FactorModel& model) {
  if (model.dim < 1 || model.dim > kMaxDim) throw DomainError("dim", "factor dimension must be 1 or 2");
  if (static_cast<int>(model.drift.size()) != model.dim) throw DomainError("drift", "needs one field per dimension");
  if (static_cast<int>(model.vol.size()) != model.dim) throw DomainError("vol", "needs one field per dimension");
  auto same = [&](const ScalarField& f, const char* name) {
    if (!f.valid()) throw DomainError(name, "field missing");
    if (f.dim() != model.dim) throw DomainError(name, "field dimension differs from model dimension");
  };
  for (const auto& f : model.drift) same(f, "drift");
  for (const auto& f : model.vol) same(f, "vol");
  same(model.eta, "eta");
  same(model.lambda, "lambda");
  const auto& c = model.constants;
  if (!(c.c_lower > 0.0)) throw DomainError("c_lower", "must be positive");
  if (!(c.c_upper > 0.0)) throw DomainError("c_upper", "must be positive");
  if (!(c.k0 > 0.0 && c.k0 <= 1.0)) throw DomainError("k0", "must lie in (0, 1]");
}

FactorModel constant_model(int dim, double eta, double lambda, const Point& drift, const Point& sigma) {
  if (!(eta > 0.0)) throw DomainError("eta", "constant impact must be positive");
  if (!(lambda >= 0.0)) throw DomainError("lambda", "constant risk must be nonnegative");
  if (drift.size() != dim || sigma.size() != dim) throw DomainError("dim", "drift/sigma length must equal dim");
  FactorModel m;
  m.id = "constant";
  m.dim = dim;
  for (int i = 0; i < dim; ++i) {
    m.drift.push_back(ScalarField::constant(dim, drift[i]));
    m.vol.push_back(ScalarField::constant(dim, sigma[i]));
  }
  m.eta = ScalarField::constant(dim, eta);
  m.lambda = ScalarField::constant(dim, lambda);
  m.constants.c_lower = eta;
  m.constants.c_upper = std::max({1.0, eta, lambda, drift.cwiseAbs().maxCoeff(), sigma.cwiseAbs().maxCoeff()});
  m.constants.k0 = 1.0;
  m.declares_bounded_costs = true;
  m.declares_elliptic = sigma.cwiseAbs().minCoeff() > 0.0;
  check_model(m);
  return m;
}

ScalarField default_sigma_tilde_sq() { return ScalarField::tanh_profile(2, 1, 0.5, 0.3, 1.0); }

FactorModel example_ex1_model(double mu, double sigma, const ScalarField& sigma_tilde_sq) {
  if (!sigma_tilde_sq.valid() || sigma_tilde_sq.dim() != 2)
    throw DomainError("sigma_tilde_sq", "must be a field on the two-factor space");
  const auto range = sigma_tilde_sq.range();
  if (!range) throw DomainError("sigma_tilde_sq", "squared volatility must have bounded range");
  if (range->lo < 0.0) throw DomainError("sigma_tilde_sq", "squared volatility must be nonnegative");
  if (!sigma_tilde_sq.bounded_gradient()) throw DomainError("sigma_tilde_sq", "derivative must be bounded");
  for (double y1 : {-2.0, 0.3, 1.7}) {
    Point y(2);
    y << y1, 0.4 * y1;
    if (sigma_tilde_sq.gradient(y)[0] != 0.0)
      throw DomainError("sigma_tilde_sq", "must depend on the second factor only");
  }
  if (!(sigma > 0.0)) throw DomainError("sigma", "volatility of the second factor must be positive");

  FactorModel m;
  m.id = "ex1";
  m.dim = 2;
  Point ou(2);
  ou << -1.0, 0.0;
  m.drift = {ScalarField::affine(0.0, ou), ScalarField::constant(2, mu)};
  m.vol = {ScalarField::constant(2, 1.0), ScalarField::constant(2, sigma)};
  m.eta = ScalarField::tanh_profile(2, 0, 2.0, 1.0, -1.0);
  m.lambda = sigma_tilde_sq;
  m.constants.c_lower = 1.0;
  // Bounds: eta <= 3, |b| <= max(1,|mu|)(1+|y|), |sigma| <= max(1,sigma),
  // |L eta / eta| <= 1 and |D eta|^(alpha+1)/eta <= 1.
  double dlam = 0.0;
  {
    // sup |D lambda| over a fine scan of the only active axis
    for (int i = -2000; i <= 2000; ++i) {
      Point y(2);
      y << 0.0, i * 0.01;
      dlam = std::max(dlam, sigma_tilde_sq.gradient(y).norm());
    }
  }
  m.constants.c_upper = std::max({3.0, range->hi, std::abs(mu), sigma, 1.0, dlam});
  m.constants.k0 = 1.0;
  m.declares_bounded_costs = true;
  m.declares_elliptic = true;
  check_model(m);
  return m;
}

FactorModel ou_liquidity_model(double kappa, double sigma, double lambda) {
  if (!(sigma > 0.0)) throw DomainError("sigma", "must be positive");
  if (!(lambda >= 0.0)) throw DomainError("lambda", "must be nonnegative");
  FactorModel m;
  m.id = "ou_liquidity";
  m.dim = 1;
  Point slope(1);
  slope << -kappa;
  m.drift = {ScalarField::affine(0.0, slope)};
  m.vol = {ScalarField::constant(1, sigma)};
  m.eta = ScalarField::tanh_profile(1, 0, 2.0, 1.0, -1.0);
  m.lambda = ScalarField::constant(1, lambda);
  m.constants.c_lower = 1.0;
  m.constants.c_upper = std::max({3.0, lambda, std::abs(kappa), sigma, 1.0, 0.5 * sigma * sigma + 1.0});
  m.constants.k0 = 1.0;
  check_model(m);
  return m;
}

FactorModel model_from_json(const nlohmann::json& spec) {
  FactorModel m;
  m.id = spec.value("id", std::string("custom"));
  m.dim = spec.at("dim").get<int>();
  for (const auto& f : spec.at("drift")) m.drift.push_back(field_from_json(f, m.dim));
  for (const auto& f : spec.at("vol")) m.vol.push_back(field_from_json(f, m.dim));
  m.eta = field_from_json(spec.at("eta"), m.dim);
  m.lambda = field_from_json(spec.at("lambda"), m.dim);
  const auto& c = spec.at("constants");
  m.constants.c_lower = c.at("c_lower").get<double>();
  m.constants.c_upper = c.at("c_upper").get<double>();
  m.constants.k0 = c.at("k0").get<double>();
  if (spec.contains("declares")) {
    m.declares_bounded_costs = spec["declares"].value("bounded_costs", true);
    m.declares_elliptic = spec["declares"].value("elliptic", true);
  }
  check_model(m);
  return m;
}

}  // namespace rliq
