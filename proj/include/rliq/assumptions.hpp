#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rliq/model.hpp"

namespace rliq {

/// Axis-aligned box in the factor space.
struct Box {
  Point lo;
  Point hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

/// i-th point (i >= 0) of the Halton sequence mapped into `box`.
Point halton_point(const Box& box, std::size_t index);

struct AssumptionCheck {
  std::string id;  // "L.1" ... "F.3", "derivatives"
  int samples = 0;
  double worst_margin = 0.0;  // min over samples of (allowed - observed); >= 0 passes
  bool passed = true;
  std::optional<Point> witness;  // set when the check failed
  std::string detail;            // which inequality produced the worst margin
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;

  bool all_passed() const;
  const AssumptionCheck* find(const std::string& id) const;
};

/// Evaluates the coefficient assumptions at quasi-random points of `box`:
/// growth, Lipschitz and boundedness of b and sigma, ellipticity when
/// declared, the growth of eta and lambda, the sup-norm bounds on L eta / eta
/// and |D eta|^(alpha+1) / eta, bounded costs when declared, and consistency
/// of every declared gradient and Hessian with central finite differences.
/// Violations are reported, never thrown.
AssumptionReport validate_assumptions(const FactorModel& model, const RobustParams& params, const Box& box,
                                      int n_samples, int threads = 1);

}  // namespace rliq
