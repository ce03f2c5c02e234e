#pragma once

#include <vector>

#include <json.hpp>

#include "rliq/assumptions.hpp"
#include "rliq/value_solution.hpp"

namespace rliq {

struct BoundsOptions {
  int n_samples = 1000;      // Halton points for sampled sup-norms
  int n_time_samples = 65;   // s-levels for the h-hat inequality
  double inflation = 1.1;    // safety factor on sampled sups
  double L_max = 1e12;
};

struct BoundConstants {
  double L = 0.0;
  double K = 0.0;
  double delta0 = 0.0;  // +inf when L eta = 0
  double delta1 = 0.0;
  double delta = 0.0;
  double C0_hat = 0.0;  // start of the L search is 2 C0_hat
  double Leta_norm = 0.0;  // inflated sampled sup |L eta / eta|
  double n_growth = 0.0;
  double inflation = 1.1;
  int samples = 0;
  double hhat_margin = 0.0;  // worst margin of the h-hat inequality at the chosen L

  nlohmann::json to_json() const;
};

/// K, delta0, delta1, delta and the weight rate L of h-hat = e^(L(T-t)) <y>^n,
/// L the first value of 2 C0, 4 C0, ... for which
///   -d_t h - L h - 2^alpha C^(alpha+1) |Dh|^(alpha+1) - lambda + h^(beta+1)/(beta eta^beta) >= 0
/// at all sampled nodes. Throws DomainError when no L below L_max works.
BoundConstants compute_constants(const FactorModel& model, const RobustParams& params, const Box& box,
                                 const BoundsOptions& opts = {});

double hhat(double t, const Point& y, const BoundConstants& c, const RobustParams& params);
/// eta (1 - |L eta/eta| (T-t)) / (T-t)^(1/beta), for t in [T - delta, T).
double subsolution_lower(double t, const Point& y, const BoundConstants& c, const FactorModel& model,
                         const RobustParams& params);
/// eta (1 + K (T-t)^eps) / (T-t)^(1/beta) + h-hat, for t in [T - delta, T).
double supersolution_upper(double t, const Point& y, const BoundConstants& c, const FactorModel& model,
                           const RobustParams& params);

struct NodeVerdict {
  std::size_t time_index;
  std::size_t space_index;
  double t;
  double lower;
  double value;
  double upper;
  double slack;
  bool lower_ok;
  bool upper_ok;
};

struct BoundCertificate {
  std::vector<NodeVerdict> nodes;
  std::size_t lower_violations = 0;
  std::size_t upper_violations = 0;
  double min_lower_margin = 0.0;  // min (v + slack - lower)
  double min_upper_margin = 0.0;  // min (upper + slack - v)
  double interval_C = 0.0;        // empirical sup (T-t)^(1/beta) v-hat / <y>^n
  bool lower_positive = true;
  double slack_factor = 3.0;
  double delta = 0.0;
  BoundConstants constants;

  bool passed() const noexcept { return lower_violations == 0 && upper_violations == 0; }
  nlohmann::json to_json(std::size_t max_listed = 50) const;
};

/// Compares v with both bounds at every node with T - delta <= t <= T - tau_min.
/// The slack at a node is slack_factor * error_estimate / (T-t)^(1/beta).
BoundCertificate verify_sandwich(const ValueSolution& sol, const BoundConstants& consts, const FactorModel& model,
                                 double slack_factor = 3.0);

struct RateFit {
  double rate_v = 0.0;   // +inf when the errors vanish
  double rate_Dv = 0.0;
  bool degenerate_v = false;
  bool degenerate_Dv = false;
  std::vector<double> s;
  std::vector<double> err_v;   // sup_y |w - eta| / <y>^n
  std::vector<double> err_Dv;  // sup_y |Dw - D eta|, D eta by the same differences as Dw

  nlohmann::json to_json() const;
};

/// Log-log least squares of the terminal errors against T - t at dyadic
/// times 2^-k T, k_max - n_dyadic < k <= k_max, k_max the largest k with
/// 2^-k T >= 4 tau_min.
RateFit terminal_rate_fit(const ValueSolution& sol, const FactorModel& model, int n_dyadic = 8);

/// Slope of log y against log x by least squares.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rliq
