#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rliq {

/// Points and small matrices of the factor space (d <= 2), stack allocated.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

inline constexpr int kMaxDim = 2;

/// <y> = (1 + |y|^2)^(1/2)
inline double bracket(const Point& y) { return std::sqrt(1.0 + y.squaredNorm()); }

struct Interval {
  double lo;
  double hi;
};

/// Value, gradient and Hessian of a scalar field at one point.
struct FieldValue {
  double value = 0.0;
  Point grad;
  SmallMat hess;
};

/// Scalar coefficient field on R^d with exact first and second derivatives.
///
/// Fields come from a closed set of primitives (constant, affine, tanh
/// profile, bracket power) combined by sums and products; derivatives follow
/// from the product rule, so no expression parsing or symbolic algebra is
/// involved. Instances are immutable and cheap to copy.
class ScalarField {
 public:
  struct Node;

  ScalarField() = default;

  static ScalarField constant(int dim, double c);
  static ScalarField affine(double offset, const Point& slope);
  /// level + amplitude * tanh(scale * y[axis] + shift)
  static ScalarField tanh_profile(int dim, int axis, double level, double amplitude, double scale,
                                  double shift = 0.0);
  /// coeff * <y>^exponent
  static ScalarField bracket_power(int dim, double coeff, double exponent);
  static ScalarField sum(std::vector<ScalarField> terms);
  static ScalarField product(std::vector<ScalarField> factors);

  int dim() const;
  bool valid() const noexcept { return static_cast<bool>(node_); }

  double operator()(const Point& y) const;
  Point gradient(const Point& y) const;
  FieldValue eval(const Point& y) const;

  /// Exact range over all of R^d when the field is bounded, nullopt otherwise.
  std::optional<Interval> range() const;
  /// True when the gradient is bounded over R^d.
  bool bounded_gradient() const;

  /// Canonical description, round-trips through field_from_json.
  nlohmann::json to_json() const;

 private:
  explicit ScalarField(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

ScalarField field_from_json(const nlohmann::json& spec, int dim);

}  // namespace rliq
