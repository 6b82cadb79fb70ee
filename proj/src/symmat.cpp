#include "glrl/symmat.hpp"

#include <algorithm>
#include <cmath>

namespace glrl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::NoEscape: return "NoEscape";
    case ErrorCode::NoAlignment: return "NoAlignment";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::ClassificationMismatch: return "ClassificationMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

Matrix symmetrized(const Matrix& a) {
  require(a.rows() == a.cols(), ErrorCode::InvalidInput, "SymMat needs a square array");
  require(a.rows() >= 1, ErrorCode::InvalidInput, "SymMat needs dim >= 1");
  Matrix s = 0.5 * (a + a.transpose());
  return s;
}

}  // namespace

SymMat::SymMat(const Matrix& a) : m_(symmetrized(a)) {}
SymMat::SymMat(Matrix&& a) : m_(symmetrized(a)) {}

SymMat SymMat::zero(int d) { return SymMat(Matrix::Zero(d, d)); }
SymMat SymMat::identity(int d) { return SymMat(Matrix::Identity(d, d)); }
SymMat SymMat::diagonal(const Vector& diag) { return SymMat(Matrix(diag.asDiagonal())); }
SymMat SymMat::outer(const Vector& v) { return SymMat(Matrix(v * v.transpose())); }

SymMat SymMat::operator+(const SymMat& o) const { return SymMat(Matrix(m_ + o.m_)); }
SymMat SymMat::operator-(const SymMat& o) const { return SymMat(Matrix(m_ - o.m_)); }
SymMat SymMat::operator-() const { return SymMat(Matrix(-m_)); }
SymMat SymMat::operator*(double s) const { return SymMat(Matrix(s * m_)); }

void fix_signs(Matrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      // strict '>' keeps the lowest index on ties
      if (std::abs(vectors(r, c)) > best_abs) {
        best_abs = std::abs(vectors(r, c));
        best = r;
      }
    }
    if (vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

EigDecomp eig(const SymMat& a) {
  require(a.all_finite(), ErrorCode::InvalidInput, "eig: non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
  require(solver.info() == Eigen::Success, ErrorCode::InvalidInput, "eig: solver failed");
  const int d = a.dim();
  EigDecomp out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  // Eigen returns ascending order
  for (int i = 0; i < d; ++i) {
    out.values(i) = solver.eigenvalues()(d - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  fix_signs(out.vectors);
  return out;
}

TopEigPair top_eigpair(const SymMat& a) {
  EigDecomp e = eig(a);
  TopEigPair t;
  t.value = e.values(0);
  t.vector = e.vectors.col(0);
  t.gap = a.dim() > 1 ? e.values(0) - e.values(1) : 0.0;
  // a tied top eigenvalue: project the lowest-index basis vector with a
  // substantial component onto the top eigenspace
  const double tie = SymTolerances{}.eig * std::max(1.0, std::abs(t.value));
  Eigen::Index m = 1;
  while (m < e.values.size() && t.value - e.values(m) <= tie) ++m;
  if (m > 1) {
    const Matrix V = e.vectors.leftCols(m);
    const double floor = 1.0 / std::sqrt(static_cast<double>(a.dim()));
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      const Vector p = V * V.row(i).transpose();
      if (p.norm() >= floor * (1.0 - 1e-12)) {
        t.vector = p.normalized();
        break;
      }
    }
    t.gap = 0.0;
  }
  return t;
}

SymMat frac_power(const SymMat& a, double p, const SymTolerances& tol) {
  require(p > 0.0, ErrorCode::InvalidInput, "frac_power: exponent must be positive");
  EigDecomp e = eig(a);
  const double norm2 = e.values.cwiseAbs().maxCoeff();
  const double lmin = e.values.minCoeff();
  if (lmin < -tol.psd * norm2) {
    throw Error(ErrorCode::NotPSD, "frac_power: lambda_min=" + std::to_string(lmin) +
                                       " below -tol*||A||_2");
  }
  Vector powered(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    powered(i) = std::pow(std::max(e.values(i), 0.0), p);
  }
  return SymMat(Matrix(e.vectors * powered.asDiagonal() * e.vectors.transpose()));
}

double nuclear_norm(const SymMat& a) { return eig(a).values.cwiseAbs().sum(); }

double spectral_norm(const SymMat& a) { return eig(a).values.cwiseAbs().maxCoeff(); }

double lambda_min(const SymMat& a) { return eig(a).values.minCoeff(); }

double low_rankness(const SymMat& a, int r) {
  require(r >= 0 && r <= a.dim(), ErrorCode::InvalidInput, "low_rankness: r out of range");
  Vector s = eig(a).values.cwiseAbs();
  std::sort(s.data(), s.data() + s.size(), std::greater<>());
  double tail = 0.0;
  for (int i = r; i < a.dim(); ++i) tail += s(i) * s(i);
  return std::sqrt(tail);
}

int numerical_rank(const SymMat& a, double rel_tol) {
  Vector s = eig(a).values.cwiseAbs();
  const double top = s.maxCoeff();
  if (top == 0.0) return 0;
  return static_cast<int>((s.array() > rel_tol * top).count());
}

}  // namespace glrl
