#include "rliq/operators.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <stdexcept>
#include <vector>

namespace rliq {

DiscreteGenerator::DiscreteGenerator(const FactorModel& model, const SpaceGrid& grid) : grid_(grid) {
  if (model.dim != grid.dim()) throw DomainError("grid", "dimension differs from the model");
  const std::size_t n = grid.size();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * (1 + 2 * grid.dim()));
  for (std::size_t k = 0; k < n; ++k) {
    const Point y = grid.point(k);
    const auto ij = grid.multi(k);
    double center = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
      const double h = grid.spacing(a);
      const double s = model.vol[a](y);
      const double b = model.drift[a](y);
      const std::size_t stride = a == 0 ? 1 : static_cast<std::size_t>(grid.n(0));
      const int i = ij[a];
      if (i == 0) {
        center -= b / h;
        trip.emplace_back(k, k + stride, b / h);
      } else if (i == grid.n(a) - 1) {
        center += b / h;
        trip.emplace_back(k, k - stride, -b / h);
      } else {
        const double diff = 0.5 * s * s / (h * h);
        center -= 2.0 * diff;
        trip.emplace_back(k, k - stride, diff - 0.5 * b / h);
        trip.emplace_back(k, k + stride, diff + 0.5 * b / h);
      }
    }
    trip.emplace_back(k, k, center);
  }
  L_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  L_.setFromTriplets(trip.begin(), trip.end());
  L_.makeCompressed();
}

Eigen::MatrixXd DiscreteGenerator::gradient(const Eigen::VectorXd& w) const {
  const std::size_t n = grid_.size();
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), grid_.dim());
  for (std::size_t k = 0; k < n; ++k) {
    const auto ij = grid_.multi(k);
    for (int a = 0; a < grid_.dim(); ++a) {
      const double h = grid_.spacing(a);
      const std::size_t st = a == 0 ? 1 : static_cast<std::size_t>(grid_.n(0));
      const int i = ij[a];
      double d;
      if (i == 0)
        d = (-3.0 * w[k] + 4.0 * w[k + st] - w[k + 2 * st]) / (2.0 * h);
      else if (i == grid_.n(a) - 1)
        d = (3.0 * w[k] - 4.0 * w[k - st] + w[k - 2 * st]) / (2.0 * h);
      else
        d = (w[k + st] - w[k - st]) / (2.0 * h);
      g(static_cast<Eigen::Index>(k), a) = d;
    }
  }
  return g;
}

struct ShiftedSolver::Impl {
  const DiscreteGenerator& gen;
  double tol;
  int max_iter;
  // d = 1: bands of -L
  Eigen::VectorXd lower, diag, upper;
  // d = 2: -L with positions of the diagonal entries
  SparseMatrix A;
  std::vector<Eigen::Index> diag_pos;
  Eigen::VectorXd base_values;
  Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>> krylov;

  Impl(const DiscreteGenerator& g, double t, int it) : gen(g), tol(t), max_iter(it) {
    const SparseMatrix& L = gen.matrix();
    const Eigen::Index n = L.rows();
    if (gen.grid().dim() == 1) {
      lower = Eigen::VectorXd::Zero(n);
      diag = Eigen::VectorXd::Zero(n);
      upper = Eigen::VectorXd::Zero(n);
      for (Eigen::Index r = 0; r < n; ++r)
        for (SparseMatrix::InnerIterator it(L, r); it; ++it) {
          if (it.col() == r) diag[r] = -it.value();
          else if (it.col() == r - 1) lower[r] = -it.value();
          else if (it.col() == r + 1) upper[r] = -it.value();
          else throw std::logic_error("generator is not tridiagonal");
        }
    } else {
      A = -L;
      A.makeCompressed();
      diag_pos.resize(static_cast<std::size_t>(n));
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index p = A.outerIndexPtr()[r]; p < A.outerIndexPtr()[r + 1]; ++p)
          if (A.innerIndexPtr()[p] == r) diag_pos[static_cast<std::size_t>(r)] = p;
      base_values = Eigen::Map<const Eigen::VectorXd>(A.valuePtr(), A.nonZeros());
      krylov.setTolerance(tol);
      krylov.setMaxIterations(max_iter);
    }
  }
};

ShiftedSolver::ShiftedSolver(const DiscreteGenerator& gen, double rel_tol, int max_iter)
    : impl_(std::make_unique<Impl>(gen, rel_tol, max_iter)) {}

ShiftedSolver::~ShiftedSolver() = default;

double ShiftedSolver::solve(double c, const Eigen::VectorXd& d, const Eigen::VectorXd& rhs, Eigen::VectorXd& x) {
  Impl& m = *impl_;
  const Eigen::Index n = rhs.size();
  if (m.gen.grid().dim() == 1) {
    // Thomas algorithm
    Eigen::VectorXd cp(n), dp(n);
    double den = m.diag[0] + c + d[0];
    cp[0] = m.upper[0] / den;
    dp[0] = rhs[0] / den;
    for (Eigen::Index i = 1; i < n; ++i) {
      den = m.diag[i] + c + d[i] - m.lower[i] * cp[i - 1];
      cp[i] = m.upper[i] / den;
      dp[i] = (rhs[i] - m.lower[i] * dp[i - 1]) / den;
    }
    x.resize(n);
    x[n - 1] = dp[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
    last_iterations_ = 1;
    return 0.0;
  }
  Eigen::Map<Eigen::VectorXd>(m.A.valuePtr(), m.A.nonZeros()) = m.base_values;
  for (Eigen::Index r = 0; r < n; ++r) m.A.valuePtr()[m.diag_pos[static_cast<std::size_t>(r)]] += c + d[r];
  m.krylov.compute(m.A);
  x = m.krylov.solveWithGuess(rhs, x);
  last_iterations_ = static_cast<int>(m.krylov.iterations());
  const double rn = rhs.norm();
  const double res = (rhs - m.A * x).norm() / (rn > 0.0 ? rn : 1.0);
  return res;
}

}  // namespace rliq
