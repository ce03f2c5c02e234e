#include <doctest.h>

#include "rliq/grid.hpp"
#include "rliq/nonlinearity.hpp"

using namespace rliq;

TEST_CASE("H and vartheta* in one dimension with m = 2") {
  const FactorModel M = constant_model(1.0, 0.0);
  const double theta = 0.4;
  const RobustParams P = make_params(2.0, 2.0, 1.0, theta);
  Point y = Point::Zero(1), q(1);
  q << 1.7;
  const Point v = maximizer_vartheta(y, q, M, P);
  CHECK(v[0] == doctest::Approx(2.0 * theta * q[0]));
  const double inner = q[0] * v[0] - P.a / theta * v[0] * v[0];
  CHECK(inner == doctest::Approx(theta * q[0] * q[0]));
  CHECK(hamiltonian_H(y, q, M, P) == doctest::Approx(inner));
}

TEST_CASE("vartheta* vanishes for theta = 0 and Dv = 0") {
  const FactorModel M = constant_model(1.0, 0.0);
  Point y = Point::Zero(1), q(1);
  q << 2.0;
  CHECK(maximizer_vartheta(y, q, M, make_params(2.0, 4.0, 1.0, 0.0)).norm() == 0.0);
  q << 0.0;
  CHECK(maximizer_vartheta(y, q, M, make_params(2.0, 4.0, 1.0, 0.5)).norm() == 0.0);
  CHECK(hamiltonian_H(y, q, M, make_params(2.0, 4.0, 1.0, 0.5)) == 0.0);
}

TEST_CASE("binomial tail matches the closed form") {
  for (double beta : {0.5, 1.0, 2.0, 3.5})
    for (double z : {-0.4, -0.1, 1e-3, 0.2, 0.45}) {
      const double closed = std::pow(1.0 + z, beta + 1.0) - 1.0 - (beta + 1.0) * z;
      CHECK(binomial_tail(z, beta) == doctest::Approx(closed).epsilon(1e-10));
    }
}

TEST_CASE("geometric time nodes") {
  const auto s = geometric_s_nodes(1.0, 1e-4, 100, 1.1);
  REQUIRE(s.size() == 100);
  CHECK(s.front() == doctest::Approx(1e-4));
  CHECK(s.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
}

TEST_CASE("time nodes never jump in step size") {
  for (int n : {20, 60, 160, 400}) {
    CAPTURE(n);
    const auto s = geometric_s_nodes(1.0, 1e-4, n, 1.05);
    REQUIRE(s.size() == static_cast<std::size_t>(n));
    CHECK(s.back() == doctest::Approx(1.0));
    double worst = 0.0;
    for (std::size_t i = 2; i < s.size(); ++i) worst = std::max(worst, (s[i] - s[i - 1]) / (s[i - 1] - s[i - 2]));
    CHECK(worst < 2.0);
  }
}

TEST_CASE("interpolation stencils reproduce polynomials") {
  const Box box{Point::Constant(2, -2.0), Point::Constant(2, 3.0)};
  const SpaceGrid g(box, {11, 9});
  auto sample = [&](auto f) {
    Eigen::VectorXd v(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = f(g.point(k));
    return v;
  };
  const auto lin = sample([](const Point& y) { return 1.0 + 2.0 * y[0] - 0.5 * y[1] + 0.3 * y[0] * y[1]; });
  const auto cub = sample([](const Point& y) { return y[0] * y[0] * y[0] - 2.0 * y[1] * y[1] * y[0] + y[1]; });
  for (std::size_t i = 0; i < 30; ++i) {
    const Point y = halton_point(box, i + 3);
    CHECK(interpolation_stencil(g, y).apply(lin) ==
          doctest::Approx(1.0 + 2.0 * y[0] - 0.5 * y[1] + 0.3 * y[0] * y[1]));
    CHECK(cubic_stencil(g, y).apply(cub) ==
          doctest::Approx(y[0] * y[0] * y[0] - 2.0 * y[1] * y[1] * y[0] + y[1]).epsilon(1e-10));
  }
}
