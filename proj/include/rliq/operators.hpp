#pragma once

#include <Eigen/Sparse>
#include <memory>

#include "rliq/grid.hpp"
#include "rliq/model.hpp"

namespace rliq {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Finite-difference generator L = 1/2 sum sigma_ii^2 d_ii + <b, D> on a
/// uniform grid.
///
/// Interior rows use central differences. Edge rows drop the second
/// derivative and use a one-sided first difference pointing into the box
/// (linear extrapolation across the edge).
class DiscreteGenerator {
 public:
  DiscreteGenerator(const FactorModel& model, const SpaceGrid& grid);

  const SpaceGrid& grid() const noexcept { return grid_; }
  const SparseMatrix& matrix() const noexcept { return L_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& w) const { return L_ * w; }
  /// Second-order gradient, central inside and one-sided on the edges. One
  /// column per dimension.
  Eigen::MatrixXd gradient(const Eigen::VectorXd& w) const;

 private:
  SpaceGrid grid_;
  SparseMatrix L_;
};

/// Solves (c I - L + diag(d)) x = rhs for the generator's L.
///
/// d = 1 uses the Thomas algorithm on the tridiagonal system. d = 2 uses
/// BiCGSTAB with a Jacobi preconditioner on the full (unsplit) matrix.
class ShiftedSolver {
 public:
  explicit ShiftedSolver(const DiscreteGenerator& gen, double rel_tol = 1e-13, int max_iter = 500);
  ~ShiftedSolver();
  ShiftedSolver(const ShiftedSolver&) = delete;
  ShiftedSolver& operator=(const ShiftedSolver&) = delete;

  /// `x` holds the initial guess on entry. Returns the relative residual.
  double solve(double c, const Eigen::VectorXd& d, const Eigen::VectorXd& rhs, Eigen::VectorXd& x);

  int last_iterations() const noexcept { return last_iterations_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int last_iterations_ = 0;
};

}  // namespace rliq
