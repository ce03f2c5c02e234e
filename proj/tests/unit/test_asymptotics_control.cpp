#include <doctest.h>

#include "rliq/asymptotics.hpp"
#include "rliq/control.hpp"

using namespace rliq;

namespace {
const Box kBox1{Point::Constant(1, -4.0), Point::Constant(1, 4.0)};
}

TEST_CASE("first-order correction on a one-factor model") {
  const FactorModel M = ou_liquidity_model(1.0, 1.0, 0.3);
  const RobustParams P0 = make_params(2.0, 4.0, 1.0, 0.0);
  const SpaceTimeGrid g = make_grid(1.0, 1e-4, 160, kBox1, {41}, 1.05);
  const ValueSolution bench = solve_benchmark(M, P0, g);
  const CorrectionSolution w1 = solve_w1_grid(bench, M, P0, g);
  CHECK(w1.min_w1 >= 0.0);
  CHECK(std::isfinite(w1.C1));

  std::vector<std::pair<double, Point>> pts;
  std::vector<double> want;
  for (std::size_t n : {std::size_t(40), std::size_t(100)}) {
    const std::size_t k = 20;
    pts.push_back({g.t_nodes[n], g.space.point(k)});
    want.push_back(w1.w1[n][k]);
  }
  const CorrectionSolution fk = solve_w1_feynman_kac(bench, M, P0, pts, 4000, 3);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(std::abs(fk.estimate[i] - want[i]) <= 4.0 * fk.stderr_[i] + 2e-3);

  const ExpansionReport rep = expansion_check(M, with_theta(P0, 0.1), {0.2, 0.1, 0.05}, g, kBox1, {}, {&bench, &w1});
  CHECK(rep.monotone);
  CHECK(rep.order_in_band(P0.alpha));
  CHECK(rep.thetas.front() == 0.2);
}

TEST_CASE("expansion needs two levels and beta > 2 alpha") {
  const FactorModel M = constant_model(1.0, 0.0);
  const SpaceTimeGrid g = make_grid(1.0, 1e-4, 40, kBox1, {9});
  CHECK_THROWS_AS(expansion_check(M, make_params(2.0, 4.0, 1.0, 0.1), {0.1}, g, kBox1), DomainError);
  CHECK_THROWS_AS(expansion_check(M, make_params(2.0, 2.0, 1.0, 0.1), {0.2, 0.1}, g, kBox1), DomainError);
}

TEST_CASE("constant model: residuals vanish and the refit is exact") {
  const FactorModel M = constant_model(1.0, 0.25);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.1);
  const SpaceTimeGrid g = make_grid(1.0, 1e-4, 60, kBox1, {9});
  const ExpansionReport rep = expansion_check(M, P, {0.2, 0.1}, g, kBox1);
  for (double r : rep.residual_norms) CHECK(r < 1e-12);
  CHECK(rep.order_in_band(P.alpha));
  const ValueSolution s = solve_singular(M, P, g);
  const RefitResult rf = equivalent_risk_refit(s, M, P, g);
  CHECK(rf.sup_gap <= 5.0 * rf.tolerance);
}

TEST_CASE("feedback controls on the constant model") {
  const FactorModel M = constant_model(1.0, 0.0);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.3);
  const ValueSolution sol = solve_singular(M, P, make_grid(1.0, 1e-4, 120, kBox1, {17}));
  Point y = Point::Zero(1);
  CHECK(optimal_xi(0.4, y, 0.0, sol, M, P) == 0.0);
  CHECK(optimal_xi(0.4, y, 2.0, sol, M, P) == doctest::Approx(2.0 / 0.6).epsilon(1e-6));
  CHECK(optimal_vartheta(0.4, y, sol, M, with_theta(P, 0.0)).norm() == 0.0);

  SimulationSpec spec;
  spec.y0 = y;
  spec.t0 = 0.25;
  spec.x0 = 1.0;
  spec.n_paths = 50;
  spec.n_steps = 60;
  spec.keep_paths = true;
  const PathBundle b = simulate(M, P, sol, spec);
  for (const auto& r : b.paths) {
    CHECK(r.monotone);
    for (std::size_t k = 0; k < r.X.size(); ++k) CHECK(std::abs(r.X[k] - (1.0 - b.times[k]) / 0.75) < 1e-6);
  }
  const CostEstimate c = estimate_cost(b, P, CostMode::direct);
  CHECK(c.mean == doctest::Approx(1.0 / 0.75).epsilon(1e-6));
  CHECK(c.mean == doctest::Approx(c.impact + c.risk - c.penalty));

  spec.x0 = 0.0;
  spec.keep_paths = false;
  CHECK(estimate_cost(simulate(M, P, sol, spec), P, CostMode::direct).mean == 0.0);
  CHECK_THROWS_AS(estimate_cost(simulate(M, P, sol, spec), P, CostMode::reweighted), DomainError);
}

TEST_CASE("theta = 0: both measures coincide bit for bit and the penalty is 0") {
  const FactorModel M = ou_liquidity_model(1.0, 1.0, 0.3);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.0);
  const ValueSolution sol = solve_singular(M, P, make_grid(1.0, 1e-4, 80, kBox1, {33}));
  SimulationSpec spec;
  spec.y0 = Point::Zero(1);
  spec.n_paths = 200;
  spec.n_steps = 50;
  const PathBundle w = simulate(M, P, sol, spec);
  spec.measure = Measure::reference;
  const PathBundle r = simulate(M, P, sol, spec);
  for (std::size_t i = 0; i < w.paths.size(); ++i) {
    CHECK(w.paths[i].cost() == r.paths[i].cost());
    CHECK(w.paths[i].penalty == 0.0);
    CHECK(r.paths[i].logweight == 0.0);
    CHECK(w.paths[i].max_vartheta == 0.0);
  }
}

TEST_CASE("results do not depend on the thread count") {
  const FactorModel M = ou_liquidity_model(1.0, 1.0, 0.3);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.2);
  const ValueSolution sol = solve_singular(M, P, make_grid(1.0, 1e-4, 80, kBox1, {33}));
  SimulationSpec spec;
  spec.y0 = Point::Zero(1);
  spec.n_paths = 300;
  spec.n_steps = 40;
  spec.measure = Measure::reference;
  const PathBundle a = simulate(M, P, sol, spec);
  spec.threads = 3;
  const PathBundle b = simulate(M, P, sol, spec);
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    CHECK(a.paths[i].cost() == b.paths[i].cost());
    CHECK(a.paths[i].logweight == b.paths[i].logweight);
  }
}

TEST_CASE("pairwise statistics") {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const SampleStats s = sample_stats(x);
  CHECK(s.mean == doctest::Approx(499.5));
  CHECK(s.stderr_ == doctest::Approx(std::sqrt(1000.0 * 1001.0 / 12.0 / 1000.0)).epsilon(1e-3));
}
