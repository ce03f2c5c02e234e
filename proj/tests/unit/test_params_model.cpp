#include <doctest.h>

#include "rliq/assumptions.hpp"
#include "rliq/model.hpp"

using namespace rliq;

TEST_CASE("derived constants from (p, m)") {
  const RobustParams a = make_params(2.0, 2.0, 1.0, 0.1);
  CHECK(a.alpha == doctest::Approx(1.0));
  CHECK(a.beta == doctest::Approx(1.0));
  CHECK(a.epsilon == doctest::Approx(0.0));
  CHECK(a.a == doctest::Approx(0.25));

  const RobustParams b = make_params(2.0, 4.0, 1.0, 0.1);
  CHECK(b.alpha == doctest::Approx(1.0 / 3.0));
  CHECK(b.beta == doctest::Approx(1.0));
  CHECK(b.epsilon == doctest::Approx(2.0 / 3.0));
  CHECK(b.a == doctest::Approx(27.0 / 256.0));
  CHECK(b.regular());

  const RobustParams c = with_theta(b, 0.3);
  CHECK(c.alpha == b.alpha);
  CHECK(c.a == b.a);
  CHECK(c.theta == 0.3);
}

TEST_CASE("parameter preconditions name the field") {
  auto field_of = [](auto&& f) {
    try {
      f();
    } catch (const DomainError& e) {
      return e.field();
    }
    return std::string();
  };
  CHECK(field_of([] { make_params(1.0, 4.0, 1.0, 0.1); }) == "p");
  CHECK(field_of([] { make_params(2.0, 1.5, 1.0, 0.1); }) == "m");
  CHECK(field_of([] { make_params(2.0, 4.0, 0.0, 0.1); }) == "T");
  CHECK(field_of([] { make_params(2.0, 4.0, 1.0, -0.1); }) == "theta");
}

TEST_CASE("two-factor example coefficients") {
  const FactorModel m = example_ex1_model(0.3, 1.5, default_sigma_tilde_sq());
  Point y(2);
  y << 0.0, 0.0;
  CHECK(m.eta(y) == doctest::Approx(2.0));
  CHECK(m.lambda(y) == doctest::Approx(0.5));
  y << 2.0, 5.0;
  const Point b = m.b(y);
  CHECK(b[0] == doctest::Approx(-2.0));
  CHECK(b[1] == doctest::Approx(0.3));
  const auto r = m.eta.range();
  REQUIRE(r.has_value());
  CHECK(r->lo == doctest::Approx(1.0));
  CHECK(r->hi == doctest::Approx(3.0));
}

TEST_CASE("declared gradients agree with central differences") {
  const FactorModel m = example_ex1_model(0.0, 1.0, default_sigma_tilde_sq());
  const Box box{Point::Constant(2, -3.0), Point::Constant(2, 3.0)};
  const double h = 1e-5;
  for (std::size_t i = 0; i < 50; ++i) {
    const Point y = halton_point(box, i);
    for (const ScalarField* f : {&m.eta, &m.lambda}) {
      const Point g = f->gradient(y);
      for (int a = 0; a < 2; ++a) {
        Point e = Point::Zero(2);
        e[a] = h;
        const double fd = ((*f)(y + e) - (*f)(y - e)) / (2.0 * h);
        CHECK(std::abs(fd - g[a]) <= 1e-6 * std::max(1.0, std::abs(g[a])));
      }
    }
  }
}

TEST_CASE("assumption checks") {
  const Box box{Point::Constant(2, -3.0), Point::Constant(2, 3.0)};
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.1);
  SUBCASE("two-factor example passes") {
    const AssumptionReport r = validate_assumptions(example_ex1_model(0.0, 1.0, default_sigma_tilde_sq()), P, box, 1000);
    CHECK(r.all_passed());
  }
  SUBCASE("constant model passes") {
    const Box b1{Point::Constant(1, -3.0), Point::Constant(1, 3.0)};
    const AssumptionReport r = validate_assumptions(constant_model(1.0, 0.25), P, b1, 200);
    CHECK(r.all_passed());
  }
  SUBCASE("eta(y) = y fails with a witness") {
    FactorModel m = constant_model(1.0, 0.25);
    Point slope(1);
    slope << 1.0;
    m.eta = ScalarField::affine(0.0, slope);
    const Box b1{Point::Constant(1, -3.0), Point::Constant(1, 3.0)};
    const AssumptionReport r = validate_assumptions(m, P, b1, 200);
    CHECK_FALSE(r.all_passed());
    bool witnessed = false;
    for (const auto& c : r.checks)
      if (!c.passed && c.witness) witnessed = true;
    CHECK(witnessed);
  }
}

TEST_CASE("model JSON round trip") {
  const FactorModel m = example_ex1_model(0.2, 0.7, default_sigma_tilde_sq());
  const FactorModel back = model_from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  Point y(2);
  y << 0.4, -1.3;
  CHECK(back.eta(y) == m.eta(y));
  CHECK(back.lambda(y) == m.lambda(y));
}
