#include "rliq/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rliq/json_util.hpp"

namespace rliq {

namespace fs = std::filesystem;

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path) {
  for (std::size_t i = 0; i < header.size(); ++i) buf_ += (i ? "," : "") + header[i];
  buf_ += '\n';
}

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  if (!row_start_) buf_ += ',';
  buf_ += s;
  row_start_ = false;
  return *this;
}

CsvWriter& CsvWriter::operator<<(double x) { return *this << fmt_double(x); }
CsvWriter& CsvWriter::operator<<(std::size_t n) { return *this << std::to_string(n); }

void CsvWriter::end_row() {
  buf_ += '\n';
  row_start_ = true;
}

void CsvWriter::close() { write_text(path_, buf_); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--solution", 0, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("--solution", 0, path.string() + ": " + e.what());
  }
}

nlohmann::json meta_header(const std::string& command, const ExperimentConfig& cfg, int threads) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config_hash"] = hex64(fnv1a(cfg.text));
  j["solution_hash"] = hex64(cfg.solution_hash());
  j["seed"] = cfg.seed;
  j["threads"] = threads;
  j["params"] = {{"p", cfg.params.p},         {"m", cfg.params.m},         {"T", cfg.params.T},
                 {"theta", cfg.params.theta}, {"alpha", cfg.params.alpha}, {"beta", cfg.params.beta},
                 {"epsilon", cfg.params.epsilon}, {"a", cfg.params.a}};
  j["model"] = cfg.model.to_json();
  return j;
}

nlohmann::json solver_meta_json(const SolverMeta& m) {
  return {{"model_id", m.model_id},
          {"method", m.method},
          {"error_estimate", json_number(m.error_estimate)},
          {"lte", json_numbers(m.lte)},
          {"max_newton_iterations", m.max_newton_iterations},
          {"max_linear_residual", json_number(m.max_linear_residual)},
          {"terminal_constant", json_number(m.terminal_constant)},
          {"sup_Dw", json_numbers(m.sup_Dw)},
          {"layer_iterations", m.layer_iterations},
          {"layer_sigma_norm", json_number(m.layer_sigma_norm)}};
}

namespace {

std::vector<std::string> coord_header(int d, const std::vector<std::string>& tail) {
  std::vector<std::string> h{"t", "y1"};
  if (d == 2) h.push_back("y2");
  h.insert(h.end(), tail.begin(), tail.end());
  return h;
}

SolverMeta solver_meta_from_json(const nlohmann::json& j, const RobustParams& params) {
  SolverMeta m;
  m.params = params;
  m.model_id = j.at("model_id").get<std::string>();
  m.method = j.at("method").get<std::string>();
  m.error_estimate = number_from_json(j.at("error_estimate"));
  for (const auto& x : j.at("lte")) m.lte.push_back(number_from_json(x));
  m.max_newton_iterations = j.at("max_newton_iterations").get<int>();
  m.max_linear_residual = number_from_json(j.at("max_linear_residual"));
  m.terminal_constant = number_from_json(j.at("terminal_constant"));
  for (const auto& x : j.at("sup_Dw")) m.sup_Dw.push_back(number_from_json(x));
  m.layer_iterations = j.at("layer_iterations").get<int>();
  m.layer_sigma_norm = number_from_json(j.at("layer_sigma_norm"));
  return m;
}

}  // namespace

void write_solution_csv(const fs::path& path, const ValueSolution& sol) {
  const int d = sol.grid.space.dim();
  std::vector<std::string> tail{"w", "v", "dw1"};
  if (d == 2) tail.push_back("dw2");
  CsvWriter csv(path, coord_header(d, tail));
  for (std::size_t n = 0; n < sol.n_time(); ++n) {
    for (std::size_t k = 0; k < sol.grid.space.size(); ++k) {
      const Point y = sol.grid.space.point(k);
      csv << sol.grid.t_nodes[n];
      for (int a = 0; a < d; ++a) csv << y[a];
      csv << sol.w[n][k] << sol.v_node(n, k);
      for (int a = 0; a < d; ++a) csv << sol.dw[n](k, a);
      csv.end_row();
    }
  }
  csv.close();
}

ValueSolution read_solution(const fs::path& dir, const ExperimentConfig& cfg) {
  const nlohmann::json meta = read_json(dir / "meta.json");
  const std::string want = hex64(cfg.solution_hash());
  const std::string have = meta.value("solution_hash", std::string());
  if (have != want)
    throw ConfigError("--solution", 0,
                      "solution in " + dir.string() + " was computed for another configuration (hash " + have +
                          ", expected " + want + ")");
  if (meta.value("schema_version", 0) != kSchemaVersion) throw ConfigError("--solution", 0, "unsupported schema_version");

  ValueSolution sol;
  sol.grid = cfg.make_space_time_grid();
  sol.meta = solver_meta_from_json(meta.at("solver"), cfg.params);
  sol.eta = sol.grid.space.sample(cfg.model.eta);
  const int d = sol.grid.space.dim();
  const std::size_t N = sol.grid.n_time(), K = sol.grid.space.size();
  sol.w.assign(N, Eigen::VectorXd(K));
  sol.dw.assign(N, Eigen::MatrixXd(K, d));

  std::ifstream in(dir / "w.csv", std::ios::binary);
  if (!in) throw ConfigError("--solution", 0, "cannot open " + (dir / "w.csv").string());
  std::string line;
  std::getline(in, line);
  const std::size_t cols = 1 + d + 2 + d;
  std::vector<double> row(cols);
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (count >= N * K) throw ConfigError("--solution", 0, "w.csv has more rows than the grid");
    std::istringstream ls(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      if (c >= cols) throw ConfigError("--solution", 0, "w.csv row " + std::to_string(count + 2) + " has extra columns");
      row[c++] = std::strtod(cell.c_str(), nullptr);
    }
    if (c != cols) throw ConfigError("--solution", 0, "w.csv row " + std::to_string(count + 2) + " is short");
    const std::size_t n = count / K, k = count % K;
    if (std::abs(row[0] - sol.grid.t_nodes[n]) > 1e-12 * sol.grid.T)
      throw ConfigError("--solution", 0, "w.csv time nodes differ from the configured grid");
    sol.w[n][k] = row[1 + d];
    for (int a = 0; a < d; ++a) sol.dw[n](k, a) = row[3 + d + a];
    ++count;
  }
  if (count != N * K) throw ConfigError("--solution", 0, "w.csv has fewer rows than the grid");
  return sol;
}

void write_correction_csv(const fs::path& path, const CorrectionSolution& c) {
  const int d = c.grid.space.dim();
  CsvWriter csv(path, coord_header(d, {"w1", "v1"}));
  for (std::size_t n = 0; n < c.w1.size(); ++n) {
    for (std::size_t k = 0; k < c.grid.space.size(); ++k) {
      const Point y = c.grid.space.point(k);
      csv << c.grid.t_nodes[n];
      for (int a = 0; a < d; ++a) csv << y[a];
      csv << c.w1[n][k] << c.v1_node(n, k);
      csv.end_row();
    }
  }
  csv.close();
}

}  // namespace rliq
