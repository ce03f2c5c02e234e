#pragma once

#include <cmath>

#include "rliq/model.hpp"
#include "rliq/params.hpp"

namespace rliq {

/// lambda - |v|^(beta+1) / (beta eta^beta)
template <class Scalar>
Scalar cost_F(Scalar lambda, Scalar eta, Scalar v, double beta) {
  using std::abs;
  using std::pow;
  return lambda - pow(abs(v), beta + 1.0) / (beta * pow(eta, beta));
}

/// theta^alpha |sigma^* q|^(alpha+1) from sigma^* q and theta^alpha.
template <class Derived>
typename Derived::Scalar hamiltonian(const Eigen::MatrixBase<Derived>& sigma_q, double theta_alpha, double alpha) {
  if (theta_alpha == 0.0) return typename Derived::Scalar(0);
  using std::pow;
  return theta_alpha * pow(sigma_q.norm(), alpha + 1.0);
}

/// Maximizer theta^alpha (1+alpha) |sigma^* q|^(alpha-1) sigma^* q, extended
/// by 0 at sigma^* q = 0.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1> worst_case_density(
    const Eigen::MatrixBase<Derived>& sigma_q, double theta_alpha, double alpha) {
  using Vec = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
  const auto r = sigma_q.norm();
  if (theta_alpha == 0.0 || r == 0) return Vec::Zero(sigma_q.size());
  using std::pow;
  return (theta_alpha * (1.0 + alpha) * pow(r, alpha - 1.0)) * sigma_q;
}

/// (1+z)^(beta+1) - 1 - (beta+1) z, the tail of the binomial series from k = 2.
/// Summed term by term for |z| < 1/2, where the closed form cancels.
template <class Scalar>
Scalar binomial_tail(Scalar z, double beta) {
  using std::abs;
  using std::pow;
  if (abs(z) >= 0.5) return pow(1.0 + z, beta + 1.0) - 1.0 - (beta + 1.0) * z;
  Scalar term = 0.5 * (beta + 1.0) * beta * z * z;
  Scalar sum = term;
  for (int k = 3; k < 80; ++k) {
    term *= (beta + 2.0 - k) / k * z;
    sum += term;
    if (abs(term) <= 1e-17 * abs(sum)) break;
  }
  return sum;
}

/// Pointwise data entering the near-terminal source.
struct LayerPoint {
  double L_eta;        // generator applied to eta
  double lambda;
  double eta;
  Point sigma_D_eta;   // sigma^* D eta
  Point sigma_star;    // diagonal of sigma^*
};

/// t L eta + t^p lambda - (eta/beta) tail(z) + theta^alpha t^eps |sigma^*(Du/t + D eta)|^(alpha+1),
/// z = u / (t eta). Throws DomainError when |z| > 1.
double F0_source(double t, double u, const Point& Du, const LayerPoint& at, const RobustParams& params);

double nonlinearity_F(const Point& y, double v, const FactorModel& model, const RobustParams& params);
double hamiltonian_H(const Point& y, const Point& q, const FactorModel& model, const RobustParams& params);
/// Maximizer of <sigma vartheta, q> - (a/theta) |vartheta|^m over vartheta.
Point maximizer_vartheta(const Point& y, const Point& q, const FactorModel& model, const RobustParams& params);
double F0_closed_form(double t, const Point& y, double u, const Point& Du, const FactorModel& model,
                      const RobustParams& params);

}  // namespace rliq
