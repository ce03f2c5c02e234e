#include <doctest.h>

#include "rliq/bounds.hpp"
#include "rliq/solver.hpp"

using namespace rliq;

namespace {
const Box kBox1{Point::Constant(1, -4.0), Point::Constant(1, 4.0)};
}

TEST_CASE("Riccati value on a coarse grid") {
  const FactorModel M = constant_model(1.0, 0.25);
  const ValueSolution sol = solve_singular(M, make_params(2.0, 4.0, 1.0, 0.2), make_grid(1.0, 1e-4, 120, kBox1, {17}));
  double worst = 0.0;
  for (std::size_t n = 0; n < sol.n_time(); ++n) {
    const double s = sol.s(n);
    const double exact = 0.5 / std::tanh(0.5 * s);
    worst = std::max(worst, std::abs(sol.v_node(n, 8) / exact - 1.0));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("lambda = 0 gives the exact blow-up profile") {
  const FactorModel M = constant_model(1.5, 0.0);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.1);
  const ValueSolution sol = solve_singular(M, P, make_grid(1.0, 1e-4, 80, kBox1, {9}));
  for (std::size_t n = 0; n < sol.n_time(); n += 7)
    CHECK(sol.v_node(n, 4) == doctest::Approx(1.5 / sol.s(n)).epsilon(1e-8));
}

TEST_CASE("interpolated accessors and controls of the solution") {
  const FactorModel M = ou_liquidity_model(1.0, 1.0, 0.3);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.1);
  const Box box{Point::Constant(1, -4.0), Point::Constant(1, 4.0)};
  const ValueSolution sol = solve_singular(M, P, make_grid(1.0, 1e-4, 100, box, {41}));
  Point y(1);
  y << 0.0;
  CHECK(sol.w_at(0.5, y) > 0.0);
  CHECK(sol.v_at(0.5, y) == doctest::Approx(sol.w_at(0.5, y) / 0.5));
  Point out(1);
  out << 10.0;
  CHECK_THROWS_AS(sol.w_at(0.5, out), DomainError);
  CHECK_THROWS_AS(sol.w_at(1.0, y), DomainError);
  for (const auto& w : sol.w) CHECK(w.minCoeff() > 0.0);
}

TEST_CASE("sandwich certificate and terminal rates for constant coefficients") {
  const FactorModel M = constant_model(1.0, 0.25);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.2);
  const ValueSolution sol = solve_singular(M, P, make_grid(1.0, 1e-4, 160, kBox1, {17}));
  const BoundConstants c = compute_constants(M, P, kBox1);
  CHECK(std::isinf(c.delta0));
  const BoundCertificate cert = verify_sandwich(sol, c, M);
  CHECK(cert.passed());
  CHECK(cert.nodes.size() > 0);
  const RateFit fit = terminal_rate_fit(sol, M);
  CHECK(fit.rate_v > 1.5);
  CHECK(fit.degenerate_Dv);
}

TEST_CASE("halving a solution breaks the lower bound") {
  const FactorModel M = constant_model(1.0, 0.25);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.2);
  ValueSolution sol = solve_singular(M, P, make_grid(1.0, 1e-4, 100, kBox1, {9}));
  for (auto& w : sol.w) w *= 0.5;
  const BoundCertificate cert = verify_sandwich(sol, compute_constants(M, P, kBox1), M);
  CHECK_FALSE(cert.passed());
  CHECK(cert.lower_violations > 0);
}

TEST_CASE("log-log slope") {
  CHECK(loglog_slope({1.0, 2.0, 4.0, 8.0}, {3.0, 12.0, 48.0, 192.0}) == doctest::Approx(2.0));
}
