#include "rliq/value_solution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rliq {

namespace {

void require_inside(const SpaceGrid& g, const Point& y) {
  if (y.size() != g.dim()) throw DomainError("y", "dimension differs from the solution grid");
  if (!g.contains(y)) {
    std::ostringstream os;
    os << "point (" << y.transpose() << ") lies outside the solution box";
    throw DomainError("y", os.str());
  }
}

}  // namespace

std::pair<std::size_t, double> ValueSolution::locate(double t) const {
  const auto& tn = grid.t_nodes;
  if (!(t >= tn.front() && t <= tn.back())) {
    std::ostringstream os;
    os << "t = " << t << " outside [" << tn.front() << ", " << tn.back() << "]";
    throw DomainError("t", os.str());
  }
  auto it = std::upper_bound(tn.begin(), tn.end(), t);
  std::size_t n = it == tn.begin() ? 0 : static_cast<std::size_t>(it - tn.begin()) - 1;
  if (n >= tn.size() - 1) return {tn.size() - 2, 1.0};
  return {n, (t - tn[n]) / (tn[n + 1] - tn[n])};
}

std::size_t ValueSolution::nearest_node(double t) const {
  const auto& tn = grid.t_nodes;
  std::size_t best = 0;
  for (std::size_t n = 1; n < tn.size(); ++n)
    if (std::abs(tn[n] - t) < std::abs(tn[best] - t)) best = n;
  return best;
}

double ValueSolution::w_at(double t, const Point& y) const {
  require_inside(grid.space, y);
  const auto [n, f] = locate(t);
  const Stencil st = interpolation_stencil(grid.space, y);
  return (1.0 - f) * st.apply(w[n]) + f * st.apply(w[n + 1]);
}

Point ValueSolution::dw_at(double t, const Point& y) const {
  require_inside(grid.space, y);
  const auto [n, f] = locate(t);
  const Stencil st = interpolation_stencil(grid.space, y);
  Point g(grid.space.dim());
  for (int a = 0; a < g.size(); ++a)
    g[a] = (1.0 - f) * st.apply(dw[n].col(a)) + f * st.apply(dw[n + 1].col(a));
  return g;
}

double ValueSolution::v_at(double t, const Point& y) const {
  return w_at(t, y) / std::pow(grid.T - t, 1.0 / beta());
}

Point ValueSolution::dv_at(double t, const Point& y) const {
  return dw_at(t, y) / std::pow(grid.T - t, 1.0 / beta());
}

GradientField gradient(const ValueSolution& sol) {
  GradientField g;
  g.dw = sol.dw;
  g.dv.reserve(sol.n_time());
  for (std::size_t n = 0; n < sol.n_time(); ++n) {
    g.dv.push_back(sol.dw[n] / std::pow(sol.s(n), 1.0 / sol.beta()));
    const double sup = sol.dw[n].size() ? sol.dw[n].rowwise().norm().maxCoeff() : 0.0;
    g.sup_dw.push_back(sup);
    g.sup_dw_all = std::max(g.sup_dw_all, sup);
  }
  return g;
}

}  // namespace rliq
