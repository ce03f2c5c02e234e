#include "rliq/assumptions.hpp"

#include <cmath>
#include <limits>

#include "rliq/parallel.hpp"

namespace rliq {

namespace {

double radical_inverse(std::size_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

constexpr double kFdStep = 1e-5;
constexpr double kFdRelTol = 1e-6;
constexpr double kSlackTol = 1e-12;

/// Worst margin of one inequality family at one sample, with its label.
struct Margin {
  double value = std::numeric_limits<double>::infinity();
  const char* label = "";
  void take(double v, const char* l) {
    if (v < value) {
      value = v;
      label = l;
    }
  }
};

double fd_margin(const ScalarField& f, const Point& y) {
  const FieldValue fv = f.eval(y);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < y.size(); ++i) {
    Point yp = y, ym = y;
    yp[i] += kFdStep;
    ym[i] -= kFdStep;
    const double g_fd = (f(yp) - f(ym)) / (2.0 * kFdStep);
    worst = std::min(worst, kFdRelTol * std::max(1.0, std::abs(fv.grad[i])) - std::abs(g_fd - fv.grad[i]));
    const Point h_fd = (f.gradient(yp) - f.gradient(ym)) / (2.0 * kFdStep);
    for (int j = 0; j < y.size(); ++j)
      worst = std::min(worst, kFdRelTol * std::max(1.0, std::abs(fv.hess(j, i))) - std::abs(h_fd[j] - fv.hess(j, i)));
  }
  return worst;
}

}  // namespace

Point halton_point(const Box& box, std::size_t index) {
  static constexpr unsigned kBases[kMaxDim] = {2, 3};
  Point y(box.dim());
  for (int i = 0; i < box.dim(); ++i)
    y[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * radical_inverse(index + 1, kBases[i]);
  return y;
}

bool AssumptionReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const AssumptionCheck* AssumptionReport::find(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return &c;
  return nullptr;
}

AssumptionReport validate_assumptions(const FactorModel& model, const RobustParams& params, const Box& box,
                                      int n_samples, int threads) {
  if (box.dim() != model.dim) throw DomainError("sample_box", "dimension differs from the model");
  for (int i = 0; i < box.dim(); ++i)
    if (!(box.hi[i] > box.lo[i])) throw DomainError("sample_box", "box must be nonempty");
  if (n_samples < 1) throw DomainError("n_samples", "need at least one sample");

  const auto& c = model.constants;
  const double Cbar = c.c_upper;
  const double n = c.n_growth(params.m);
  const double eta_lower_exp = (1.0 - params.p * c.k0) * params.m;

  std::vector<std::string> ids = {"L.1", "L.2", "L.3"};
  if (model.declares_elliptic) ids.push_back("L.4");
  ids.insert(ids.end(), {"F.1", "F.2"});
  if (model.declares_bounded_costs) ids.push_back("F.3");
  ids.push_back("derivatives");
  const std::size_t n_checks = ids.size();

  std::vector<Margin> margins(static_cast<std::size_t>(n_samples) * n_checks);
  parallel_for(static_cast<std::size_t>(n_samples), threads, [&](std::size_t s) {
    const Point y = halton_point(box, s);
    Margin* row = &margins[s * n_checks];
    std::size_t k = 0;
    const double ry = y.norm();
    const double by = bracket(y);
    const Point sig = model.sigma_diag(y);

    // L.1
    {
      Margin& mg = row[k++];
      mg.take(Cbar * (1.0 + ry) - model.b(y).norm(), "|b(y)| <= C(1+|y|)");
      const SmallMat J = model.b_jacobian(y);
      mg.take(Cbar - J.jacobiSvd().singularValues()[0], "|Db| <= C (Lipschitz)");
    }
    // L.2
    {
      Margin& mg = row[k++];
      mg.take(Cbar * (1.0 + ry) - sig.cwiseAbs().maxCoeff(), "|sigma(y)| <= C(1+|y|)");
      double lip = 0.0;
      for (int i = 0; i < model.dim; ++i) lip = std::max(lip, model.vol[i].gradient(y).norm());
      mg.take(Cbar - lip, "|D sigma| <= C (Lipschitz)");
    }
    // L.3
    row[k++].take(Cbar - sig.cwiseAbs().maxCoeff(), "|sigma| <= C");
    // L.4
    if (model.declares_elliptic) row[k++].take(sig.cwiseAbs2().minCoeff(), "min eig sigma sigma^* > 0");
    // F.1
    {
      Margin& mg = row[k++];
      const double lam = model.lambda(y);
      const double eta = model.eta(y);
      mg.take(lam, "lambda >= 0");
      mg.take(Cbar * std::pow(by, n) - lam, "lambda <= C <y>^n");
      mg.take(eta - c.c_lower * std::pow(by, eta_lower_exp), "eta >= c <y>^((1-p k0) m)");
      mg.take(Cbar * std::pow(by, n) - eta, "eta <= C <y>^n");
    }
    // F.2
    {
      Margin& mg = row[k++];
      const FieldValue e = model.eta.eval(y);
      if (e.value > 0.0) {
        mg.take(Cbar - std::abs(model.generator(e, y) / e.value), "|L eta / eta| <= C");
        mg.take(Cbar - std::pow(e.grad.norm(), params.alpha + 1.0) / e.value, "|D eta|^(alpha+1) / eta <= C");
      } else {
        mg.take(e.value, "eta > 0");
      }
    }
    // F.3
    if (model.declares_bounded_costs) {
      Margin& mg = row[k++];
      const double eta = model.eta(y);
      const FieldValue l = model.lambda.eval(y);
      mg.take(eta - c.c_lower, "eta >= c");
      mg.take(Cbar - eta, "eta <= C");
      mg.take(Cbar - std::abs(l.value), "|lambda| <= C");
      mg.take(Cbar - l.grad.norm(), "|D lambda| <= C");
    }
    // derivatives
    {
      Margin& mg = row[k++];
      mg.take(fd_margin(model.eta, y), "eta derivatives vs finite differences");
      mg.take(fd_margin(model.lambda, y), "lambda derivatives vs finite differences");
      for (const auto& f : model.drift) mg.take(fd_margin(f, y), "drift derivatives vs finite differences");
      for (const auto& f : model.vol) mg.take(fd_margin(f, y), "vol derivatives vs finite differences");
    }
  });

  AssumptionReport report;
  for (std::size_t k = 0; k < n_checks; ++k) {
    AssumptionCheck chk;
    chk.id = ids[k];
    chk.samples = n_samples;
    chk.worst_margin = std::numeric_limits<double>::infinity();
    std::size_t worst_sample = 0;
    for (std::size_t s = 0; s < static_cast<std::size_t>(n_samples); ++s) {
      const Margin& mg = margins[s * n_checks + k];
      if (mg.value < chk.worst_margin) {
        chk.worst_margin = mg.value;
        chk.detail = mg.label;
        worst_sample = s;
      }
    }
    const double tol = chk.id == "L.4" ? 0.0 : kSlackTol * std::max(1.0, Cbar);
    chk.passed = chk.id == "L.4" ? chk.worst_margin > tol : chk.worst_margin >= -tol;
    if (!chk.passed) chk.witness = halton_point(box, worst_sample);
    report.checks.push_back(std::move(chk));
  }
  return report;
}

}  // namespace rliq
