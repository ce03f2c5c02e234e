// Acceptance run: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rliq/asymptotics.hpp"
#include "rliq/bounds.hpp"
#include "rliq/control.hpp"
#include "rliq/nonlinearity.hpp"
#include "rliq/solver.hpp"

#ifndef RLIQ_CLI_PATH
#define RLIQ_CLI_PATH "rliq"
#endif

using namespace rliq;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Golden-section maximum of a unimodal f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b, double* arg = nullptr) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && b - a > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  if (arg) *arg = x;
  return f(x);
}

void criterion1() {
  const double eta = 1.0, lambda = 0.25;
  const FactorModel M = constant_model(eta, lambda);
  const RobustParams P = make_params(2.0, 4.0, 1.0, 0.3);
  const Box box{Point::Constant(1, -5.0), Point::Constant(1, 5.0)};
  const SpaceTimeGrid g = make_grid(1.0, 1e-4, 512, box, {256});
  const auto t0 = std::chrono::steady_clock::now();
  const ValueSolution sol = solve_singular(M, P, g);
  const double secs = seconds_since(t0);
  const double k = std::sqrt(lambda / eta), c = std::sqrt(lambda * eta);
  double worst = 0.0;
  for (std::size_t n = 0; n < sol.n_time(); ++n) {
    const double s = sol.s(n);
    if (s < 1e-3) continue;
    const double exact = c / std::tanh(k * s);
    for (std::size_t j = 0; j < g.space.size(); ++j) worst = std::max(worst, std::abs(sol.v_node(n, j) / exact - 1.0));
  }
  report(1, worst <= 1e-3 && secs <= 30.0, fmt("max rel err %.3e (<= 1e-3), %.2f s (<= 30 s)", worst, secs));
}

void criterion2() {
  double worst = 0.0;
  std::string detail;
  for (auto [p, m, theta] : {std::tuple{2.0, 4.0, 0.1}, std::tuple{3.0, 4.0, 0.0}}) {
    const double eta = 2.0;
    const FactorModel M = constant_model(eta, 0.0);
    const RobustParams P = make_params(p, m, 1.0, theta);
    const Box box{Point::Constant(1, -4.0), Point::Constant(1, 4.0)};
    const SpaceTimeGrid g = make_grid(1.0, 1e-4, 300, box, {33});
    const ValueSolution sol = solve_singular(M, P, g);
    double w = 0.0;
    for (std::size_t n = 0; n < sol.n_time(); ++n) {
      const double exact = eta * std::pow(sol.s(n), -1.0 / P.beta);
      for (std::size_t j = 0; j < g.space.size(); ++j) w = std::max(w, std::abs(sol.v_node(n, j) / exact - 1.0));
    }
    detail += fmt("(p,m)=(%g,%g): %.2e  ", p, m, w);
    worst = std::max(worst, w);
  }
  report(2, worst <= 1e-4, detail + "(<= 1e-4)");
}

void criterion3() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst_H = 0.0, worst_arg = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const double m = 2.0 + 4.0 * U(rng);
    const double theta = 2.0 * (1.0 - U(rng));  // (0, 2]
    Point sig(2), q(2);
    sig << 0.2 + 2.0 * U(rng), 0.2 + 2.0 * U(rng);
    q << 4.0 * U(rng) - 2.0, 4.0 * U(rng) - 2.0;
    const FactorModel M = constant_model(2, 1.0, 0.0, Point::Zero(2), sig);
    const RobustParams P = make_params(2.0, m, 1.0, theta);
    const Point y = Point::Zero(2);
    const double k = P.a / theta;
    auto objective = [&](const Point& v) { return sig.cwiseProduct(v).dot(q) - k * std::pow(v.norm(), m); };
    auto along = [&](double phi) {
      Point e(2);
      e << std::cos(phi), std::sin(phi);
      const double slope = sig.cwiseProduct(e).dot(q);
      if (slope <= 0.0) return 0.0;
      const double rmax = 2.0 * std::pow(slope / k, 1.0 / (m - 1.0)) + 1.0;
      return golden_max([&](double r) { return r * slope - k * std::pow(r, m); }, 0.0, rmax);
    };
    const int n_phi = 3600;
    double best = -1.0, best_phi = 0.0;
    for (int i = 0; i < n_phi; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / n_phi;
      const double f = along(phi);
      if (f > best) best = f, best_phi = phi;
    }
    const double dphi = 2.0 * std::numbers::pi / n_phi;
    const double brute = golden_max(along, best_phi - dphi, best_phi + dphi);
    const double H = hamiltonian_H(y, q, M, P);
    const double at_star = objective(maximizer_vartheta(y, q, M, P));
    worst_H = std::max(worst_H, std::abs(H - brute) / brute);
    worst_arg = std::max(worst_arg, std::abs(at_star - brute) / brute);
  }
  report(3, worst_H <= 1e-6 && worst_arg <= 1e-6,
         fmt("100 draws: max rel |H - brute| %.2e, objective at vartheta* %.2e (<= 1e-6)", worst_H, worst_arg));
}

struct Ex1 {
  FactorModel model = example_ex1_model(0.0, 1.0, default_sigma_tilde_sq());
  Box box{Point::Constant(2, -5.0), Point::Constant(2, 5.0)};
  SpaceTimeGrid grid = make_grid(1.0, 1e-4, 480, box, {81, 81}, 1.025);
  RobustParams P0 = make_params(2.0, 4.0, 1.0, 0.0);
  RobustParams P05 = make_params(2.0, 4.0, 1.0, 0.05);
  RobustParams P10 = make_params(2.0, 4.0, 1.0, 0.1);
  ValueSolution bench, sol05, sol10;
};

void criterion4(const Ex1& e) {
  const BoundConstants c = compute_constants(e.model, e.P10, e.box);
  const BoundCertificate cert = verify_sandwich(e.sol10, c, e.model, 3.0);
  report(4, cert.passed() && !cert.nodes.empty(),
         fmt("%g nodes on [T - %.4f, T - 1e-4]: %g lower, %g upper violations", double(cert.nodes.size()), c.delta,
             double(cert.lower_violations), double(cert.upper_violations)));
}

void criterion5(const Ex1& e) {
  const RateFit r = terminal_rate_fit(e.sol10, e.model, 8);
  const RateFit r0 = terminal_rate_fit(e.bench, e.model, 8);
  const double need_v = e.P10.epsilon - 0.15, need_Dv = 0.5 - e.P10.alpha / e.P10.beta - 0.15;
  const bool ok = r.rate_v >= need_v && r.rate_Dv >= need_Dv && r0.rate_v >= 0.85;
  report(5, ok,
         fmt("theta=0.1: rate_v %.3f (>= %.3f), rate_Dv %.3f (>= %.3f); ", r.rate_v, need_v, r.rate_Dv, need_Dv) +
             fmt("theta=0: rate_v %.3f (>= 0.85)", r0.rate_v));
}

void criterion6(const Ex1& e) {
  const CorrectionSolution w1 = solve_w1_grid(e.bench, e.model, e.P0, e.grid);
  const ExpansionReport rep = expansion_check(e.model, e.P10, {0.2, 0.1, 0.05}, e.grid, e.box, {}, {&e.bench, &w1});
  const double need = 2.0 * e.P10.alpha - 0.3;
  const bool exp_ok = rep.monotone && (rep.degenerate || rep.fitted_order >= need);

  std::vector<std::pair<double, Point>> pts;
  std::vector<double> grid_vals;
  const SpaceGrid& sg = e.grid.space;
  const std::vector<std::array<double, 2>> ys{{-2.0, 0.0}, {-1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}, {1.0, -1.0}};
  for (double s : {0.75, 0.5, 0.25, 0.1}) {
    const std::size_t n = e.bench.nearest_node(1.0 - s);
    for (const auto& y : ys) {
      const int i = static_cast<int>(std::lround((y[0] - sg.lo(0)) / sg.spacing(0)));
      const int j = static_cast<int>(std::lround((y[1] - sg.lo(1)) / sg.spacing(1)));
      const std::size_t k = sg.index(i, j);
      pts.push_back({e.grid.t_nodes[n], sg.point(k)});
      grid_vals.push_back(w1.w1[n][k]);
    }
  }
  const CorrectionSolution fk = solve_w1_feynman_kac(e.bench, e.model, e.P0, pts, 100000, 20240607);
  double max_z = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    max_z = std::max(max_z, std::abs(fk.estimate[i] - grid_vals[i]) / fk.stderr_[i]);
  std::ostringstream os;
  os << "residuals";
  for (double r : rep.residual_norms) os << " " << fmt("%.4g", r);
  os << (rep.monotone ? " (monotone)" : " (NOT monotone)") << ", order " << fmt("%.3f", rep.fitted_order) << " (>= "
     << fmt("%.3f", need) << "); w1 grid vs MC: max |z| " << fmt("%.2f", max_z) << " at " << pts.size()
     << " points, 1e5 paths";
  report(6, exp_ok && max_z <= 3.0, os.str());
}

void criterion7(const Ex1& e) {
  // refit on a time grid with every interval halved
  SpaceTimeGrid fine = e.grid;
  fine.t_nodes.clear();
  for (std::size_t n = 0; n + 1 < e.grid.t_nodes.size(); ++n) {
    fine.t_nodes.push_back(e.grid.t_nodes[n]);
    fine.t_nodes.push_back(0.5 * (e.grid.t_nodes[n] + e.grid.t_nodes[n + 1]));
  }
  fine.t_nodes.push_back(e.grid.t_nodes.back());
  const RefitResult rf = equivalent_risk_refit(e.sol10, e.model, e.P10, fine);
  const double dec = worst_rate_decrease({&e.bench, &e.sol05, &e.sol10});
  report(7, rf.sup_gap <= 5.0 * rf.tolerance && dec <= 0.0,
         fmt("refit sup gap %.3e (<= 5 x %.3e); worst decrease of the rate field over theta {0, 0.05, 0.1}: %.3e",
             rf.sup_gap, rf.tolerance, dec));
}

void criteria8to10(const Ex1& e) {
  SimulationSpec spec;
  spec.y0 = Point::Zero(2);
  spec.x0 = 1.0;
  spec.n_paths = 10000;
  spec.n_steps = 400;
  spec.seed = 20240608;
  spec.probe_s = {1e-3};
  const PathBundle opt = simulate(e.model, e.P10, e.sol10, spec);
  double x_probe = 0.0;
  bool monotone = true;
  for (const auto& r : opt.paths) {
    x_probe = std::max(x_probe, std::abs(r.X_probe[0]));
    monotone = monotone && r.monotone;
  }
  const SaddleReport sad = saddle_check(e.model, e.P10, e.sol10, opt, {0.8, 1.25}, {0.5, 1.5});

  // constant model, lambda = 0, beta = 1: X(t) = x (T - t)/(T - t0)
  const FactorModel C = constant_model(1.0, 0.0);
  const RobustParams PC = make_params(2.0, 4.0, 1.0, 0.1);
  const Box box1{Point::Constant(1, -4.0), Point::Constant(1, 4.0)};
  const ValueSolution solc = solve_singular(C, PC, make_grid(1.0, 1e-4, 200, box1, {33}));
  SimulationSpec cs;
  cs.y0 = Point::Zero(1);
  cs.t0 = 0.2;
  cs.x0 = 1.0;
  cs.n_paths = 20;
  cs.keep_paths = true;
  const PathBundle cb = simulate(C, PC, solc, cs);
  double x_err = 0.0;
  for (const auto& r : cb.paths)
    for (std::size_t k = 0; k < r.X.size(); ++k)
      x_err = std::max(x_err, std::abs(r.X[k] - cs.x0 * (1.0 - cb.times[k]) / (1.0 - cs.t0)));

  const double z = (sad.optimal.mean - sad.v_grid) / sad.optimal.stderr_;
  report(8, x_probe <= 0.05 && monotone && x_err <= 1e-3 && std::abs(z) <= 3.0,
         fmt("max |X(T - 1e-3 T)| %.2e (<= 0.05); constant-model X error %.2e (<= 1e-3); ", x_probe, x_err) +
             fmt("J %.5f +- %.5f vs v|x|^p %.5f (z %.2f)", sad.optimal.mean, sad.optimal.stderr_, sad.v_grid, z));

  bool saddle_ok = sad.entries.size() == 4;
  std::string d9;
  for (const auto& en : sad.entries) {
    saddle_ok = saddle_ok && en.holds && !en.degenerate;
    d9 += en.kind + "=" + fmt("%g", en.value) + ": " + fmt("%+.4f (%.1f se)  ", en.diff_mean, en.diff_mean / en.diff_stderr);
  }
  report(9, saddle_ok, d9);

  SimulationSpec rs = spec;
  rs.measure = Measure::reference;
  const PathBundle ref = simulate(e.model, e.P10, e.sol10, rs);
  const SampleStats dens = density_check(ref);
  const CostEstimate rw = estimate_cost(ref, e.P10, CostMode::reweighted);
  const double comb = std::hypot(rw.stderr_, sad.optimal.stderr_);
  const double zd = (dens.mean - 1.0) / dens.stderr_, zc = (rw.mean - sad.optimal.mean) / comb;
  report(10, std::abs(zd) <= 3.0 && std::abs(zc) <= 3.0,
         fmt("E[exp(logweight)] %.4f +- %.4f (z %.2f); reweighted - direct z %.2f", dens.mean, dens.stderr_, zd, zc));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void criterion11() {
  const fs::path root = fs::temp_directory_path() / "rliq_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "ex1_small.yaml";
  {
    std::ofstream out(cfg);
    out << "model: {id: ex1, mu: 0.0, sigma: 1.0}\n"
           "params: {p: 2.0, m: 4.0, T: 1.0, theta: 0.1}\n"
           "grid: {box: {lo: [-4.0, -4.0], hi: [4.0, 4.0]}, n_space: [21, 21], n_time: 60, tau_min: 1.0e-4}\n"
           "simulation: {y0: [0.0, 0.0], n_paths: 400, n_steps: 60, probe_s: [0.01], dump_paths: 3}\n"
           "asymptotics:\n"
           "  thetas: [0.2, 0.1]\n"
           "  fk_paths: 500\n"
           "  fk_points: [[0.5, 0.0, 0.0], [0.25, 1.2, -0.8]]\n"
           "seed: 5\n";
  }
  const std::string cli = RLIQ_CLI_PATH;
  bool ran = true;
  for (int run = 0; run < 2; ++run) {
    const fs::path d = root / ("run" + std::to_string(run));
    const std::string base = "\"" + cli + "\" ";
    const std::string c = " --config \"" + cfg.string() + "\" --threads 2 --seed 9";
    const std::string quiet = " 2>/dev/null";
    ran = ran && std::system((base + "solve" + c + " --out \"" + (d / "solve").string() + "\"" + quiet).c_str()) == 0;
    for (const char* sub : {"verify", "simulate"}) {
      const int rc = std::system((base + sub + c + " --solution \"" + (d / "solve").string() + "\" --out \"" +
                                  (d / sub).string() + "\"" + quiet)
                                     .c_str());
      ran = ran && rc != -1 && WEXITSTATUS(rc) <= 1;
    }
    const int rc = std::system((base + "asymptotics" + c + " --out \"" + (d / "asymptotics").string() + "\"" + quiet).c_str());
    ran = ran && rc != -1 && WEXITSTATUS(rc) <= 1;
  }
  std::size_t files = 0, differ = 0;
  for (const auto& ent : fs::recursive_directory_iterator(root / "run0")) {
    if (!ent.is_regular_file()) continue;
    const fs::path rel = fs::relative(ent.path(), root / "run0");
    ++files;
    if (!fs::exists(root / "run1" / rel) || slurp(ent.path()) != slurp(root / "run1" / rel)) ++differ;
  }
  std::size_t files1 = 0;
  for (const auto& ent : fs::recursive_directory_iterator(root / "run1")) files1 += ent.is_regular_file();
  report(11, ran && files > 0 && differ == 0 && files1 == files,
         fmt("%g files from solve/verify/simulate/asymptotics, %g differ between two runs", double(files), double(differ)));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  auto guard = [](int id, const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& ex) {
      report(id, false, std::string("exception: ") + ex.what());
    }
  };
  guard(1, criterion1);
  guard(2, criterion2);
  guard(3, criterion3);

  Ex1 e;
  bool solved = true;
  try {
    e.bench = solve_benchmark(e.model, e.P0, e.grid);
    e.sol05 = solve_singular(e.model, e.P05, e.grid);
    e.sol10 = solve_singular(e.model, e.P10, e.grid);
  } catch (const std::exception& ex) {
    solved = false;
    for (int id = 4; id <= 10; ++id) report(id, false, std::string("ex1 solve failed: ") + ex.what());
  }
  if (solved) {
    guard(4, [&] { criterion4(e); });
    guard(5, [&] { criterion5(e); });
    guard(6, [&] { criterion6(e); });
    guard(7, [&] { criterion7(e); });
    try {
      criteria8to10(e);
    } catch (const std::exception& ex) {
      for (int id = 8; id <= 10; ++id) report(id, false, std::string("exception: ") + ex.what());
    }
  }
  guard(11, criterion11);
  std::printf("%d of 11 criteria failed (%.0f s)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
