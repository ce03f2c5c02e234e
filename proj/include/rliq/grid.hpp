#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "rliq/assumptions.hpp"
#include "rliq/field.hpp"

namespace rliq {

/// Uniform tensor-product grid on a box, d <= 2. Nodes are flattened with
/// the first coordinate running fastest.
class SpaceGrid {
 public:
  SpaceGrid() = default;
  SpaceGrid(const Box& box, const std::vector<int>& n_per_dim);

  int dim() const noexcept { return dim_; }
  int n(int axis) const noexcept { return n_[axis]; }
  std::size_t size() const noexcept { return size_; }
  double lo(int axis) const noexcept { return lo_[axis]; }
  double hi(int axis) const noexcept { return hi_[axis]; }
  double spacing(int axis) const noexcept { return h_[axis]; }
  double node(int axis, int i) const noexcept { return lo_[axis] + i * h_[axis]; }
  std::vector<double> nodes(int axis) const;
  Box box() const;

  std::size_t index(int i, int j = 0) const noexcept { return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_[0]) * j; }
  /// Multi-index of a flat index.
  std::array<int, 2> multi(std::size_t k) const noexcept {
    return {static_cast<int>(k % n_[0]), static_cast<int>(k / n_[0])};
  }
  Point point(std::size_t k) const;
  bool contains(const Point& y) const;

  /// Evaluates a field at every node.
  Eigen::VectorXd sample(const ScalarField& f) const;

 private:
  int dim_ = 0;
  std::array<int, 2> n_{1, 1};
  std::array<double, 2> lo_{0.0, 0.0};
  std::array<double, 2> hi_{0.0, 0.0};
  std::array<double, 2> h_{1.0, 1.0};
  std::size_t size_ = 0;
};

/// Time nodes in [0, T - tau_min] together with the spatial grid.
///
/// Nodes are stored in increasing t. The time to maturity s = T - t grows
/// geometrically from tau_min by `ratio` per step until the step reaches a
/// cap, then stays uniform up to s = T.
struct SpaceTimeGrid {
  double T = 1.0;
  double tau_min = 1e-4;
  std::vector<double> t_nodes;
  SpaceGrid space;

  std::size_t n_time() const noexcept { return t_nodes.size(); }
  double s(std::size_t n) const noexcept { return T - t_nodes[n]; }
};

/// Time-to-maturity nodes s_0 = tau_min < ... < s_{n-1} = T.
std::vector<double> geometric_s_nodes(double T, double tau_min, int n_time, double ratio = 1.1);

SpaceTimeGrid make_grid(double T, double tau_min, int n_time, const Box& box, const std::vector<int>& n_space,
                        double ratio = 1.1);

/// Throws DomainError unless nodes increase strictly and end at T - tau_min.
void check_grid(const SpaceTimeGrid& grid);

/// Interpolation weights on a SpaceGrid: value = sum wt[c] * values[idx[c]].
struct Stencil {
  std::array<std::size_t, 16> idx{};
  std::array<double, 16> wt{};
  int count = 0;

  template <class Vec>
  double apply(const Vec& values) const {
    double out = 0.0;
    for (int c = 0; c < count; ++c) out += wt[c] * values[idx[c]];
    return out;
  }
};

/// Bilinear (linear for d = 1) interpolation. Points outside the box are
/// clamped to it.
Stencil interpolation_stencil(const SpaceGrid& grid, const Point& y);

/// Tensor-product cubic Lagrange interpolation on the four nearest nodes per
/// axis (shifted inward at the edges). Needs at least 4 nodes per axis.
Stencil cubic_stencil(const SpaceGrid& grid, const Point& y);

}  // namespace rliq
