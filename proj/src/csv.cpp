#include "glrl/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace glrl {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr,
                          const Matrix* ref) {
  std::ofstream out = open_out(path);
  const int d = tr.dim();
  const bool diag = !tr.eigenvalues.empty();
  out << "time,loss,grad_norm";
  if (diag) {
    for (int i = 1; i <= d; ++i) out << ",lambda_" << i;
    for (int i = 1; i <= d; ++i) out << ",lowrank_" << i;
  }
  if (ref) out << ",dist_to_ref";
  out << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out << fmt_double(tr.times[k]) << ',' << fmt_double(tr.loss[k]) << ','
        << fmt_double(tr.grad_norm[k]);
    if (diag) {
      for (int i = 0; i < d; ++i) out << ',' << fmt_double(tr.eigenvalues[k](i));
      // lowrank_r is the r-low-rankness, r = 1..d
      for (int i = 0; i < d; ++i)
        out << ',' << fmt_double(i + 1 < d ? tr.lowrank[k](i + 1) : 0.0);
    }
    if (ref) out << ',' << fmt_double((tr.states[k] - *ref).norm());
    out << '\n';
  }
}

void write_states_csv(const std::filesystem::path& path, const Trajectory& tr) {
  std::ofstream out = open_out(path);
  const int d = tr.dim();
  out << "time";
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) out << ",w_" << i << '_' << j;
  out << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out << fmt_double(tr.times[k]);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out << ',' << fmt_double(tr.states[k](i, j));
    out << '\n';
  }
}

Trajectory read_states_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "empty states file");
  const long cols = std::count(line.begin(), line.end(), ',');
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cols))));
  if (d < 1 || static_cast<long>(d) * d != cols)
    throw Error(ErrorCode::IoError, "states header is not square");
  Trajectory tr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<long>(vals.size()) != cols + 1)
      throw Error(ErrorCode::IoError, "malformed states row");
    Matrix W(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) W(i, j) = vals[1 + i * d + j];
    tr.times.push_back(vals[0]);
    tr.states.push_back(std::move(W));
  }
  return tr;
}

void CsvTable::add_row(std::vector<std::string> row) {
  require(row.size() == header_.size(), ErrorCode::InvalidInput, "row width mismatch");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
  std::ofstream out = open_out(path);
  out << str();
}

}  // namespace glrl
