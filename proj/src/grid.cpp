#include "rliq/grid.hpp"

#include <algorithm>
#include <cmath>

namespace rliq {

SpaceGrid::SpaceGrid(const Box& box, const std::vector<int>& n_per_dim) {
  dim_ = box.dim();
  if (dim_ < 1 || dim_ > kMaxDim) throw DomainError("box", "dimension must be 1 or 2");
  if (static_cast<int>(n_per_dim.size()) != dim_) throw DomainError("n_space", "one node count per dimension");
  size_ = 1;
  for (int a = 0; a < dim_; ++a) {
    if (n_per_dim[a] < 3) throw DomainError("n_space", "need at least 3 nodes per dimension");
    if (!(box.hi[a] > box.lo[a])) throw DomainError("box", "upper corner must exceed lower corner");
    n_[a] = n_per_dim[a];
    lo_[a] = box.lo[a];
    hi_[a] = box.hi[a];
    h_[a] = (hi_[a] - lo_[a]) / (n_[a] - 1);
    size_ *= static_cast<std::size_t>(n_[a]);
  }
}

std::vector<double> SpaceGrid::nodes(int axis) const {
  std::vector<double> out(n_[axis]);
  for (int i = 0; i < n_[axis]; ++i) out[i] = node(axis, i);
  return out;
}

Box SpaceGrid::box() const {
  Box b{Point(dim_), Point(dim_)};
  for (int a = 0; a < dim_; ++a) {
    b.lo[a] = lo_[a];
    b.hi[a] = hi_[a];
  }
  return b;
}

Point SpaceGrid::point(std::size_t k) const {
  const auto ij = multi(k);
  Point y(dim_);
  for (int a = 0; a < dim_; ++a) y[a] = node(a, ij[a]);
  return y;
}

bool SpaceGrid::contains(const Point& y) const {
  for (int a = 0; a < dim_; ++a)
    if (y[a] < lo_[a] || y[a] > hi_[a]) return false;
  return true;
}

Eigen::VectorXd SpaceGrid::sample(const ScalarField& f) const {
  Eigen::VectorXd out(size_);
  for (std::size_t k = 0; k < size_; ++k) out[k] = f(point(k));
  return out;
}

std::vector<double> geometric_s_nodes(double T, double tau_min, int n_time, double ratio) {
  if (!(T > 0.0)) throw DomainError("T", "must be positive");
  if (!(tau_min > 0.0 && tau_min < T)) throw DomainError("tau_min", "must lie in (0, T)");
  if (n_time < 3) throw DomainError("n_time", "need at least 3 time nodes");
  if (!(ratio > 1.0)) throw DomainError("ratio", "must exceed 1");

  // k geometric steps, then uniform steps no shorter than the last geometric one.
  int k_best = 0;
  for (int k = 1; k <= n_time - 2; ++k) {
    const double sk = tau_min * std::pow(ratio, k);
    if (sk >= T) break;
    const double uniform = (T - sk) / (n_time - 1 - k);
    const double last_geo = sk - sk / ratio;
    if (uniform >= last_geo) k_best = k;
  }
  std::vector<double> s(n_time);
  s[0] = tau_min;
  if (k_best > 0) {
    const double sk = tau_min * std::pow(ratio, k_best);
    if ((T - sk) / (n_time - 1 - k_best) > ratio * (sk - sk / ratio)) {
      // too few nodes for the requested ratio: stretch a pure geometric grid
      const double r = std::pow(T / tau_min, 1.0 / (n_time - 1));
      for (int k = 1; k < n_time; ++k) s[k] = tau_min * std::pow(r, k);
      s.back() = T;
      return s;
    }
  }
  for (int k = 1; k <= k_best; ++k) s[k] = tau_min * std::pow(ratio, k);
  const double sk = s[k_best];
  const int m = n_time - 1 - k_best;
  for (int j = 1; j <= m; ++j) s[k_best + j] = sk + (T - sk) * j / m;
  s.back() = T;
  return s;
}

SpaceTimeGrid make_grid(double T, double tau_min, int n_time, const Box& box, const std::vector<int>& n_space,
                        double ratio) {
  SpaceTimeGrid g;
  g.T = T;
  g.tau_min = tau_min;
  const auto s = geometric_s_nodes(T, tau_min, n_time, ratio);
  g.t_nodes.resize(s.size());
  for (std::size_t n = 0; n < s.size(); ++n) g.t_nodes[n] = T - s[s.size() - 1 - n];
  g.t_nodes.front() = 0.0;
  g.space = SpaceGrid(box, n_space);
  return g;
}

void check_grid(const SpaceTimeGrid& grid) {
  if (grid.t_nodes.size() < 3) throw DomainError("t_nodes", "need at least 3 time nodes");
  for (std::size_t n = 1; n < grid.t_nodes.size(); ++n)
    if (!(grid.t_nodes[n] > grid.t_nodes[n - 1])) throw DomainError("t_nodes", "must increase strictly");
  if (std::abs(grid.t_nodes.back() - (grid.T - grid.tau_min)) > 1e-12 * grid.T)
    throw DomainError("t_nodes", "last node must equal T - tau_min");
  if (grid.t_nodes.front() < 0.0) throw DomainError("t_nodes", "must start at or after 0");
  if (grid.space.size() == 0) throw DomainError("y_nodes", "spatial grid is empty");
}

Stencil interpolation_stencil(const SpaceGrid& grid, const Point& y) {
  std::array<int, 2> i0{0, 0};
  std::array<double, 2> fr{0.0, 0.0};
  for (int a = 0; a < grid.dim(); ++a) {
    const double x = std::clamp((y[a] - grid.lo(a)) / grid.spacing(a), 0.0, static_cast<double>(grid.n(a) - 1));
    int i = static_cast<int>(std::floor(x));
    if (i >= grid.n(a) - 1) i = grid.n(a) - 2;
    i0[a] = i;
    fr[a] = x - i;
  }
  Stencil st;
  if (grid.dim() == 1) {
    st.count = 2;
    st.idx[0] = grid.index(i0[0]);
    st.idx[1] = grid.index(i0[0] + 1);
    st.wt[0] = 1.0 - fr[0];
    st.wt[1] = fr[0];
  } else {
    st.count = 4;
    st.idx[0] = grid.index(i0[0], i0[1]);
    st.idx[1] = grid.index(i0[0] + 1, i0[1]);
    st.idx[2] = grid.index(i0[0], i0[1] + 1);
    st.idx[3] = grid.index(i0[0] + 1, i0[1] + 1);
    st.wt[0] = (1 - fr[0]) * (1 - fr[1]);
    st.wt[1] = fr[0] * (1 - fr[1]);
    st.wt[2] = (1 - fr[0]) * fr[1];
    st.wt[3] = fr[0] * fr[1];
  }
  return st;
}

Stencil cubic_stencil(const SpaceGrid& grid, const Point& y) {
  std::array<int, 2> first{0, 0};
  std::array<std::array<double, 4>, 2> w{};
  for (int a = 0; a < grid.dim(); ++a) {
    if (grid.n(a) < 4) throw DomainError("grid", "cubic interpolation needs 4 nodes per axis");
    const double x = std::clamp((y[a] - grid.lo(a)) / grid.spacing(a), 0.0, static_cast<double>(grid.n(a) - 1));
    const int i = std::clamp(static_cast<int>(std::floor(x)) - 1, 0, grid.n(a) - 4);
    first[a] = i;
    const double u = x - i;
    w[a] = {-(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0, u * (u - 2.0) * (u - 3.0) / 2.0,
            -u * (u - 1.0) * (u - 3.0) / 2.0, u * (u - 1.0) * (u - 2.0) / 6.0};
  }
  Stencil st;
  if (grid.dim() == 1) {
    st.count = 4;
    for (int c = 0; c < 4; ++c) {
      st.idx[c] = grid.index(first[0] + c);
      st.wt[c] = w[0][c];
    }
  } else {
    st.count = 16;
    for (int c1 = 0; c1 < 4; ++c1)
      for (int c0 = 0; c0 < 4; ++c0) {
        st.idx[4 * c1 + c0] = grid.index(first[0] + c0, first[1] + c1);
        st.wt[4 * c1 + c0] = w[0][c0] * w[1][c1];
      }
  }
  return st;
}

}  // namespace rliq
