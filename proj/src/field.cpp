#include "rliq/field.hpp"

#include <algorithm>
#include <cmath>

#include "rliq/params.hpp"

namespace rliq {

struct ScalarField::Node {
  int dim = 1;
  virtual ~Node() = default;
  virtual void eval(const Point& y, FieldValue& out) const = 0;
  virtual double value(const Point& y) const = 0;
  virtual std::optional<Interval> range() const = 0;
  virtual bool bounded_gradient() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

namespace {

using Node = ScalarField::Node;

void zero(int dim, FieldValue& out) {
  out.grad = Point::Zero(dim);
  out.hess = SmallMat::Zero(dim, dim);
}

struct ConstantNode final : Node {
  double c;
  ConstantNode(int d, double c_) : c(c_) { dim = d; }
  void eval(const Point&, FieldValue& out) const override {
    zero(dim, out);
    out.value = c;
  }
  double value(const Point&) const override { return c; }
  std::optional<Interval> range() const override { return Interval{c, c}; }
  bool bounded_gradient() const override { return true; }
  nlohmann::json to_json() const override { return {{"kind", "constant"}, {"value", c}}; }
};

struct AffineNode final : Node {
  double offset;
  Point slope;
  AffineNode(double o, const Point& s) : offset(o), slope(s) { dim = static_cast<int>(s.size()); }
  void eval(const Point& y, FieldValue& out) const override {
    out.value = offset + slope.dot(y);
    out.grad = slope;
    out.hess = SmallMat::Zero(dim, dim);
  }
  double value(const Point& y) const override { return offset + slope.dot(y); }
  std::optional<Interval> range() const override {
    if (slope.cwiseAbs().maxCoeff() == 0.0) return Interval{offset, offset};
    return std::nullopt;
  }
  bool bounded_gradient() const override { return true; }
  nlohmann::json to_json() const override {
    return {{"kind", "affine"}, {"offset", offset}, {"slope", std::vector<double>(slope.data(), slope.data() + dim)}};
  }
};

struct TanhNode final : Node {
  int axis;
  double level, amplitude, scale, shift;
  TanhNode(int d, int ax, double l, double a, double s, double sh)
      : axis(ax), level(l), amplitude(a), scale(s), shift(sh) {
    dim = d;
  }
  void eval(const Point& y, FieldValue& out) const override {
    zero(dim, out);
    const double th = std::tanh(scale * y[axis] + shift);
    const double sech2 = 1.0 - th * th;
    out.value = level + amplitude * th;
    out.grad[axis] = amplitude * scale * sech2;
    out.hess(axis, axis) = -2.0 * amplitude * scale * scale * sech2 * th;
  }
  double value(const Point& y) const override { return level + amplitude * std::tanh(scale * y[axis] + shift); }
  std::optional<Interval> range() const override {
    if (scale == 0.0) {
      const double v = level + amplitude * std::tanh(shift);
      return Interval{v, v};
    }
    return Interval{level - std::abs(amplitude), level + std::abs(amplitude)};
  }
  bool bounded_gradient() const override { return true; }
  nlohmann::json to_json() const override {
    return {{"kind", "tanh"},           {"axis", axis},   {"level", level},
            {"amplitude", amplitude}, {"scale", scale}, {"shift", shift}};
  }
};

struct BracketPowerNode final : Node {
  double coeff, exponent;
  BracketPowerNode(int d, double c, double k) : coeff(c), exponent(k) { dim = d; }
  void eval(const Point& y, FieldValue& out) const override {
    const double r2 = 1.0 + y.squaredNorm();
    const double r = std::sqrt(r2);
    const double k = exponent;
    const double rk2 = std::pow(r, k - 2.0);
    out.value = coeff * rk2 * r2;
    out.grad = coeff * k * rk2 * y;
    out.hess = coeff * k * rk2 * (SmallMat::Identity(dim, dim) + (k - 2.0) / r2 * (y * y.transpose()));
  }
  double value(const Point& y) const override { return coeff * std::pow(bracket(y), exponent); }
  std::optional<Interval> range() const override {
    if (coeff == 0.0 || exponent == 0.0) return Interval{coeff, coeff};
    if (exponent > 0.0) return std::nullopt;
    return Interval{std::min(0.0, coeff), std::max(0.0, coeff)};
  }
  bool bounded_gradient() const override { return coeff == 0.0 || exponent <= 1.0; }
  nlohmann::json to_json() const override {
    return {{"kind", "bracket_power"}, {"coeff", coeff}, {"exponent", exponent}};
  }
};

struct SumNode final : Node {
  std::vector<ScalarField> terms;
  explicit SumNode(std::vector<ScalarField> t) : terms(std::move(t)) { dim = terms.front().dim(); }
  void eval(const Point& y, FieldValue& out) const override {
    zero(dim, out);
    out.value = 0.0;
    for (const auto& f : terms) {
      const FieldValue fv = f.eval(y);
      out.value += fv.value;
      out.grad += fv.grad;
      out.hess += fv.hess;
    }
  }
  double value(const Point& y) const override {
    double v = 0.0;
    for (const auto& f : terms) v += f(y);
    return v;
  }
  std::optional<Interval> range() const override {
    Interval acc{0.0, 0.0};
    for (const auto& f : terms) {
      auto r = f.range();
      if (!r) return std::nullopt;
      acc.lo += r->lo;
      acc.hi += r->hi;
    }
    return acc;
  }
  bool bounded_gradient() const override {
    return std::all_of(terms.begin(), terms.end(), [](const ScalarField& f) { return f.bounded_gradient(); });
  }
  nlohmann::json to_json() const override {
    nlohmann::json j = {{"kind", "sum"}, {"terms", nlohmann::json::array()}};
    for (const auto& f : terms) j["terms"].push_back(f.to_json());
    return j;
  }
};

struct ProductNode final : Node {
  std::vector<ScalarField> factors;
  explicit ProductNode(std::vector<ScalarField> f) : factors(std::move(f)) { dim = factors.front().dim(); }
  void eval(const Point& y, FieldValue& out) const override {
    // Running product rule: (P f)'' = P'' f + 2 sym(P' f'^T) + P f''
    out = factors.front().eval(y);
    for (std::size_t i = 1; i < factors.size(); ++i) {
      const FieldValue fv = factors[i].eval(y);
      const SmallMat cross = out.grad * fv.grad.transpose();
      out.hess = out.hess * fv.value + cross + cross.transpose() + out.value * fv.hess;
      out.grad = out.grad * fv.value + out.value * fv.grad;
      out.value *= fv.value;
    }
  }
  double value(const Point& y) const override {
    double v = 1.0;
    for (const auto& f : factors) v *= f(y);
    return v;
  }
  std::optional<Interval> range() const override {
    Interval acc{1.0, 1.0};
    for (const auto& f : factors) {
      auto r = f.range();
      if (!r) return std::nullopt;
      const double c[4] = {acc.lo * r->lo, acc.lo * r->hi, acc.hi * r->lo, acc.hi * r->hi};
      acc = {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
    }
    return acc;
  }
  bool bounded_gradient() const override {
    return std::all_of(factors.begin(), factors.end(),
                       [](const ScalarField& f) { return f.bounded_gradient() && f.range().has_value(); });
  }
  nlohmann::json to_json() const override {
    nlohmann::json j = {{"kind", "product"}, {"factors", nlohmann::json::array()}};
    for (const auto& f : factors) j["factors"].push_back(f.to_json());
    return j;
  }
};

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw DomainError("dim", "factor dimension must be 1 or 2");
}

void check_same_dim(const std::vector<ScalarField>& fs, const char* what) {
  if (fs.empty()) throw DomainError(what, "needs at least one operand");
  for (const auto& f : fs) {
    if (!f.valid()) throw DomainError(what, "operand is empty");
    if (f.dim() != fs.front().dim()) throw DomainError(what, "operands have different dimensions");
  }
}

}  // namespace

ScalarField ScalarField::constant(int dim, double c) {
  check_dim(dim);
  return ScalarField(std::make_shared<ConstantNode>(dim, c));
}

ScalarField ScalarField::affine(double offset, const Point& slope) {
  check_dim(static_cast<int>(slope.size()));
  return ScalarField(std::make_shared<AffineNode>(offset, slope));
}

ScalarField ScalarField::tanh_profile(int dim, int axis, double level, double amplitude, double scale,
                                      double shift) {
  check_dim(dim);
  if (axis < 0 || axis >= dim) throw DomainError("axis", "tanh axis out of range");
  return ScalarField(std::make_shared<TanhNode>(dim, axis, level, amplitude, scale, shift));
}

ScalarField ScalarField::bracket_power(int dim, double coeff, double exponent) {
  check_dim(dim);
  return ScalarField(std::make_shared<BracketPowerNode>(dim, coeff, exponent));
}

ScalarField ScalarField::sum(std::vector<ScalarField> terms) {
  check_same_dim(terms, "sum");
  if (terms.size() == 1) return terms.front();
  return ScalarField(std::make_shared<SumNode>(std::move(terms)));
}

ScalarField ScalarField::product(std::vector<ScalarField> factors) {
  check_same_dim(factors, "product");
  if (factors.size() == 1) return factors.front();
  return ScalarField(std::make_shared<ProductNode>(std::move(factors)));
}

int ScalarField::dim() const { return node_->dim; }

double ScalarField::operator()(const Point& y) const { return node_->value(y); }

Point ScalarField::gradient(const Point& y) const { return eval(y).grad; }

FieldValue ScalarField::eval(const Point& y) const {
  FieldValue out;
  node_->eval(y, out);
  return out;
}

std::optional<Interval> ScalarField::range() const { return node_->range(); }

bool ScalarField::bounded_gradient() const { return node_->bounded_gradient(); }

nlohmann::json ScalarField::to_json() const { return node_->to_json(); }

ScalarField field_from_json(const nlohmann::json& spec, int dim) {
  if (spec.is_number()) return ScalarField::constant(dim, spec.get<double>());
  if (!spec.is_object() || !spec.contains("kind")) throw DomainError("field", "expected a number or an object with 'kind'");
  const std::string kind = spec.at("kind").get<std::string>();
  auto num = [&](const char* key, double fallback) {
    return spec.contains(key) ? spec.at(key).get<double>() : fallback;
  };
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (auto it = spec.begin(); it != spec.end(); ++it) {
      bool ok = it.key() == "kind";
      for (const char* k : keys) ok = ok || it.key() == k;
      if (!ok) throw DomainError("field." + it.key(), "unknown key for field kind '" + kind + "'");
    }
  };
  if (kind == "constant") {
    allow({"value"});
    return ScalarField::constant(dim, spec.at("value").get<double>());
  }
  if (kind == "affine") {
    allow({"offset", "slope"});
    const auto slope = spec.at("slope").get<std::vector<double>>();
    if (static_cast<int>(slope.size()) != dim) throw DomainError("field.slope", "length must equal dim");
    Point s(dim);
    for (int i = 0; i < dim; ++i) s[i] = slope[i];
    return ScalarField::affine(num("offset", 0.0), s);
  }
  if (kind == "tanh") {
    allow({"axis", "level", "amplitude", "scale", "shift"});
    return ScalarField::tanh_profile(dim, spec.value("axis", 0), num("level", 0.0), num("amplitude", 1.0),
                                     num("scale", 1.0), num("shift", 0.0));
  }
  if (kind == "bracket_power") {
    allow({"coeff", "exponent"});
    return ScalarField::bracket_power(dim, num("coeff", 1.0), spec.at("exponent").get<double>());
  }
  if (kind == "sum" || kind == "product") {
    const char* key = kind == "sum" ? "terms" : "factors";
    allow({key});
    std::vector<ScalarField> parts;
    for (const auto& s : spec.at(key)) parts.push_back(field_from_json(s, dim));
    return kind == "sum" ? ScalarField::sum(std::move(parts)) : ScalarField::product(std::move(parts));
  }
  throw DomainError("field.kind", "unknown field kind '" + kind + "'");
}

}  // namespace rliq
