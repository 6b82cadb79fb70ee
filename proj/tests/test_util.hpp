#pragma once

#include <cmath>
#include <random>

#include "glrl/dynamics.hpp"

namespace glrl::testing {

inline Matrix random_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = nd(rng);
  return a;
}

inline SymMat random_sym(int d, Rng& rng) { return SymMat(random_matrix(d, d, rng)); }

inline SymMat random_psd(int d, Rng& rng, double scale = 1.0) {
  const Matrix a = random_matrix(d, d, rng);
  return SymMat(Matrix(scale * a * a.transpose() / d));
}

/// Random sensing loss with Gaussian symmetric measurements.
inline LossSpec random_sensing(int d, int m, Rng& rng) {
  std::vector<Measurement> ms;
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int k = 0; k < m; ++k) ms.push_back({random_sym(d, rng), nd(rng)});
  return LossSpec::sensing(d, ms);
}

/// Central difference of f along direction D.
template <class F>
double directional_fd(F&& f, const Matrix& W, const Matrix& D, double h = 1e-5) {
  return (f(Matrix(W + h * D)) - f(Matrix(W - h * D))) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace glrl::testing
