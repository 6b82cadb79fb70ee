#pragma once

#include <complex>
#include <vector>

#include "glrl/dynamics.hpp"

namespace glrl {

/// Linearization of g(W) = -(W grad f(W) + grad f(W) W) at a base point.
///
/// g is extended to general square matrices as g(sym(W)), so the Jacobian
/// annihilates antisymmetric directions exactly and acts on symmetric ones as
///   J[D] = -(grad f D + D grad f) - (D^2 f[D] W + W D^2 f[D]).
class JacobianOp {
 public:
  JacobianOp(const LossSpec& spec, const SymMat& base);

  const SymMat& base_point() const { return base_; }
  Matrix apply(const Matrix& delta) const;
  /// Adjoint under the Frobenius inner product (left eigenvectors of J are
  /// eigenvectors of this map).
  Matrix apply_adjoint(const Matrix& v) const;
  /// Central finite differences of g(sym(.)) with step h.
  Matrix apply_fd(const Matrix& delta, double h = 1e-5) const;

  /// Operator matrix in the coordinates of the basis E_ii, E_ij + E_ji (i > j).
  Matrix assemble() const;

 private:
  LossSpec spec_;
  SymMat base_;
  Matrix grad_;
};

/// Lower-triangle basis of symmetric matrices used by JacobianOp::assemble.
std::vector<Matrix> sym_basis(int d);
/// Inverse of the coordinate map: sum_k c_k B_k.
Matrix from_sym_coords(const Vector& c, int d);

struct SpectralPair {
  double value = 0.0;
  Matrix matrix;
};

struct ZeroSpectrum {
  /// (mu_i + mu_j, u_i u_j^T + u_j u_i^T) for i <= j, values descending.
  std::vector<SpectralPair> pairs;
  /// Dimension of the antisymmetric null space, d (d - 1) / 2.
  int antisymmetric_zero_dim = 0;
};

/// Spectrum of the Jacobian at the origin built from eig(-grad f(0)).
ZeroSpectrum jacobian_at_zero_spectrum(const LossSpec& spec);

enum class SpectrumType { EscapePair = 1, FactorHessian = 2, Antisymmetric = 3 };

struct ClassifiedEigenvalue {
  std::complex<double> numeric;
  double predicted = 0.0;
  SpectrumType type = SpectrumType::EscapePair;
  double residual = 0.0;
};

struct ClassifiedSpectrum {
  std::vector<ClassifiedEigenvalue> symmetric;  ///< one per symmetric dimension
  std::vector<double> type1;  ///< mu_i + mu_j over the null space of W
  std::vector<double> type2;  ///< eigenvalues of -D^2 L(U) off the rotation orbit
  int antisymmetric_zero_count = 0;
  double max_residual = 0.0;
  /// Largest ||J[V] - lambda V|| / ||V|| over the type-1 left eigenvector and
  /// type-2 right eigenvector identities.
  double max_vector_residual = 0.0;
};

/// Numerically assembles the Jacobian at a critical point W of rank r and
/// labels its eigenvalues as escape pairs (type 1), factor-Hessian values
/// (type 2) or antisymmetric zeros (type 3). Throws ClassificationMismatch
/// when a predicted value has no numeric eigenvalue within match_tol
/// (relative to max(1, |value|)).
ClassifiedSpectrum critical_point_spectrum(const LossSpec& spec, const SymMat& W, int r,
                                           double match_tol = 1e-4, double crit_tol = 1e-8);

/// Hessian of L(U) = f(U U^T) / 2 applied to E.
Matrix factor_hessian_apply(const LossSpec& spec, const Matrix& U, const Matrix& E);

/// For each recorded state of traj, the smallest Frobenius distance to a
/// state of the reference.
std::vector<double> traj_set_distance(const Trajectory& traj, const Trajectory& reference);
std::vector<double> traj_set_distance(const Trajectory& traj,
                                      const std::vector<Matrix>& reference);

/// |<v, top eigenvector of sym(W(t))>| per recorded time.
std::vector<double> alignment(const Trajectory& traj, const Vector& v);
/// ||(I - v v^T) u(t)||: the sine of the angle above, without cancellation
/// when the alignment is close to 1.
std::vector<double> misalignment(const Trajectory& traj, const Vector& v);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least squares fit of ln y against ln x.
SlopeFit scaling_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace glrl
