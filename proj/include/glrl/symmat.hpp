#pragma once

#include <Eigen/Dense>

#include "glrl/error.hpp"

namespace glrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense real symmetric matrix. The stored array is always exactly symmetric:
/// construction from an arbitrary square array keeps (A + A^T) / 2.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(const Matrix& a);
  explicit SymMat(Matrix&& a);

  static SymMat zero(int d);
  static SymMat identity(int d);
  static SymMat diagonal(const Vector& diag);
  /// v v^T.
  static SymMat outer(const Vector& v);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double frobenius() const { return m_.norm(); }
  bool all_finite() const { return m_.allFinite(); }

  SymMat operator+(const SymMat& o) const;
  SymMat operator-(const SymMat& o) const;
  SymMat operator-() const;
  SymMat operator*(double s) const;
  friend SymMat operator*(double s, const SymMat& a) { return a * s; }

  /// Frobenius inner product <A, B> = tr(A^T B).
  double dot(const SymMat& o) const { return m_.cwiseProduct(o.m_).sum(); }

 private:
  Matrix m_;
};

struct EigDecomp {
  Vector values;   ///< descending
  Matrix vectors;  ///< column i pairs with values(i)
};

struct TopEigPair {
  double value = 0.0;
  Vector vector;
  double gap = 0.0;  ///< lambda_1 - lambda_2 (0 when d == 1)
};

/// Numerical tolerances shared by the kernel routines.
struct SymTolerances {
  double eig = 1e-10;
  double psd = 1e-9;
};

/// Symmetric eigendecomposition with eigenvalues sorted descending.
///
/// Signs are fixed so that the largest-magnitude component of every
/// eigenvector is positive (ties: lowest index), which makes the result a
/// deterministic function of the input bits.
EigDecomp eig(const SymMat& a);

TopEigPair top_eigpair(const SymMat& a);

/// V diag(max(lambda_i, 0)^p) V^T. Throws NotPSD when lambda_min falls below
/// -tol.psd * ||A||_2.
SymMat frac_power(const SymMat& a, double p, const SymTolerances& tol = {});

double nuclear_norm(const SymMat& a);
double spectral_norm(const SymMat& a);
double lambda_min(const SymMat& a);

/// sqrt(sum_{i > r} sigma_i^2): Frobenius distance to the nearest rank-r
/// matrix.
double low_rankness(const SymMat& a, int r);

/// Number of eigenvalues with magnitude above rel_tol * ||A||_2.
int numerical_rank(const SymMat& a, double rel_tol);

/// Frobenius norm of the antisymmetric part of an arbitrary square matrix.
inline double asymmetry(const Matrix& a) { return (a - a.transpose()).norm(); }

/// Deterministic orientation used by eig: flips each column so that its
/// largest-magnitude entry is positive.
void fix_signs(Matrix& vectors);

}  // namespace glrl
