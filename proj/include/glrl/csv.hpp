#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "glrl/dynamics.hpp"

namespace glrl {

/// Shortest round-trip-safe text for a double (17 significant digits).
std::string fmt_double(double v);

/// time, loss, grad_norm, lambda_1..lambda_d, lowrank_1..lowrank_d
/// [, dist_to_ref]. dist_to_ref is written when `ref` is non-null.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr,
                          const Matrix* ref = nullptr);

/// time, w_1_1, w_1_2, ..., w_d_d (row-major).
void write_states_csv(const std::filesystem::path& path, const Trajectory& tr);

/// Reads a file written by write_states_csv back into times and states.
Trajectory read_states_csv(const std::filesystem::path& path);

/// Simple table writer: a header row followed by rows of cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  void write(const std::filesystem::path& path) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace glrl
