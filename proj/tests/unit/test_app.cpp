#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rliq/commands.hpp"
#include "rliq/config.hpp"
#include "rliq/io.hpp"

using namespace rliq;
namespace fs = std::filesystem;

namespace {

const char* kConstant = R"(model:
  id: constant
  dim: 1
  eta: 1.0
  lambda: 0.25
params: {p: 2.0, m: 4.0, T: 1.0, theta: 0.2}
grid:
  box: {lo: [-4.0], hi: [4.0]}
  n_space: [9]
  n_time: 60
simulation: {y0: [0.0], n_paths: 200, n_steps: 40}
asymptotics: {thetas: [0.2, 0.1]}
seed: 4
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "rliq_unit" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.in.yaml";
  std::ofstream(p) << text;
  return p;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(kConstant);
  CHECK(c.model.id == "constant");
  CHECK(c.params.theta == 0.2);
  CHECK(c.grid.n_space == std::vector<int>{9});
  CHECK(c.simulation.spec.n_paths == 200);
  CHECK(c.simulation.spec.seed == 4);
  CHECK(c.text == kConstant);
  CHECK(c.solution_hash() == parse_config(kConstant).solution_hash());
  CHECK(c.solution_hash() != parse_config(replace(kConstant, "theta: 0.2", "theta: 0.3")).solution_hash());
  CHECK(c.solution_hash() == parse_config(replace(kConstant, "n_paths: 200", "n_paths: 300")).solution_hash());
}

TEST_CASE("config errors carry field and line") {
  try {
    parse_config(replace(kConstant, "  n_time: 60", "  n_tme: 60"));
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "grid.n_tme");
    CHECK(e.line() == 10);
  }
  CHECK_THROWS_AS(parse_config(replace(kConstant, "theta: 0.2", "theta: -0.2")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(kConstant, "id: constant", "id: nope")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(kConstant, "n_paths: 200", "n_paths: 0")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(kConstant, "eta: 1.0", "eta: abc")), ConfigError);
  CHECK_THROWS_AS(parse_config("model: [1, 2"), ConfigError);
}

TEST_CASE("fields from YAML") {
  const ExperimentConfig c = parse_config(replace(
      kConstant, "  id: constant\n  dim: 1\n  eta: 1.0\n  lambda: 0.25\n",
      "  id: custom\n  dim: 1\n  drift: [{kind: affine, offset: 0.0, slope: [-1.0]}]\n  vol: [1.0]\n"
      "  eta: {kind: tanh, level: 2.0, amplitude: -1.0}\n  lambda: 0.3\n"));
  Point y(1);
  y << 0.5;
  CHECK(c.model.eta(y) == doctest::Approx(2.0 - std::tanh(0.5)));
  CHECK(c.model.b(y)[0] == doctest::Approx(-0.5));
}

TEST_CASE("fnv1a reference values") {
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("solve, read back, verify, simulate and asymptotics") {
  const fs::path dir = scratch("pipeline");
  RunOptions o;
  o.config_path = write_config(dir, kConstant).string();
  std::ostringstream log;

  o.out_dir = (dir / "solve").string();
  REQUIRE(run_solve(o, log) == kExitOk);
  CHECK(fs::exists(dir / "solve" / "w.csv"));
  CHECK(fs::exists(dir / "solve" / "meta.json"));
  std::ifstream echoed(dir / "solve" / "config.yaml");
  std::stringstream ss;
  ss << echoed.rdbuf();
  CHECK(ss.str() == kConstant);

  const ExperimentConfig cfg = load_config(o.config_path);
  const ValueSolution back = read_solution(dir / "solve", cfg);
  const ValueSolution fresh = solve_singular(cfg.model, cfg.params, cfg.make_space_time_grid(), cfg.solver);
  for (std::size_t n = 0; n < fresh.n_time(); ++n) CHECK((back.w[n] - fresh.w[n]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.meta.error_estimate == fresh.meta.error_estimate);

  o.solution_dir = (dir / "solve").string();
  o.out_dir = (dir / "verify").string();
  CHECK(run_verify(o, log) == kExitOk);
  o.out_dir = (dir / "simulate").string();
  CHECK(run_simulate(o, log) == kExitOk);
  CHECK(fs::exists(dir / "simulate" / "costs.csv"));
  o.solution_dir.reset();
  o.out_dir = (dir / "asym").string();
  CHECK(run_asymptotics(o, log) == kExitOk);
  o.thetas = {0.1};
  CHECK(run_asymptotics(o, log) == kExitUsage);
}

TEST_CASE("exit codes for bad input") {
  const fs::path dir = scratch("bad");
  std::ostringstream log;
  RunOptions o;
  o.out_dir = (dir / "out").string();
  o.config_path = write_config(dir, replace(kConstant, "theta: 0.2", "theta: -1.0")).string();
  CHECK(run_solve(o, log) == kExitUsage);
  CHECK(log.str().find("theta") != std::string::npos);
  o.config_path = (dir / "missing.yaml").string();
  CHECK(run_solve(o, log) == kExitUsage);

  o.config_path = write_config(dir, kConstant).string();
  REQUIRE(run_solve(o, log) == kExitOk);
  o.solution_dir = o.out_dir;
  o.out_dir = (dir / "other").string();
  o.config_path = write_config(dir, replace(kConstant, "lambda: 0.25", "lambda: 0.3")).string();
  CHECK(run_verify(o, log) == kExitUsage);  // hash mismatch
}

TEST_CASE("assumption failures stop a solve unless forced") {
  const fs::path dir = scratch("force");
  const std::string text = replace(kConstant, "  id: constant\n  dim: 1\n  eta: 1.0\n",
                                   "  id: custom\n  dim: 1\n  drift: [0.0]\n  vol: [1.0]\n"
                                   "  eta: {kind: affine, offset: 4.5, slope: [1.0]}\n");
  RunOptions o;
  o.config_path = write_config(dir, text).string();
  o.out_dir = (dir / "out").string();
  std::ostringstream log;
  CHECK(run_solve(o, log) == kExitUsage);
  CHECK(log.str().find("assumption") != std::string::npos);
}

TEST_CASE("csv number format round-trips") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.123456789})
    CHECK(std::strtod(fmt_double(x).c_str(), nullptr) == x);
}
