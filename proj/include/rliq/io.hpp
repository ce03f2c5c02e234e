#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rliq/asymptotics.hpp"
#include "rliq/config.hpp"
#include "rliq/value_solution.hpp"

namespace rliq {

inline constexpr int kSchemaVersion = 1;

/// Formats a double with 17 significant digits (round-trips exactly).
std::string fmt_double(double x);

/// Comma-separated rows with a fixed header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  CsvWriter& operator<<(double x);
  CsvWriter& operator<<(const std::string& s);
  CsvWriter& operator<<(std::size_t n);
  void end_row();
  void close();

 private:
  std::string buf_;
  std::filesystem::path path_;
  bool row_start_ = true;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Common meta.json head: schema version, command, config hash, seed, threads.
nlohmann::json meta_header(const std::string& command, const ExperimentConfig& cfg, int threads);

nlohmann::json solver_meta_json(const SolverMeta& meta);

/// w.csv (t, y1[, y2], w, v, dw1[, dw2]) in increasing t, first factor fastest.
void write_solution_csv(const std::filesystem::path& path, const ValueSolution& sol);

/// Reads w.csv and meta.json from `dir`. The grid and coefficients come from
/// `cfg`; throws ConfigError when the stored hash differs or the file does not
/// match the grid.
ValueSolution read_solution(const std::filesystem::path& dir, const ExperimentConfig& cfg);

/// w1.csv (t, y1[, y2], w1) from the grid method.
void write_correction_csv(const std::filesystem::path& path, const CorrectionSolution& c);

}  // namespace rliq
