#pragma once

#include <vector>

#include "glrl/symmat.hpp"

namespace glrl {

/// One linear measurement y = <X, W> of a symmetric matrix.
struct Measurement {
  SymMat X;
  double y = 0.0;
};

/// Symmetrized single-entry measurement: X = (e_p e_q^T + e_q e_p^T) / 2.
Measurement entry_measurement(int d, int p, int q, double y);

/// Convex quadratic (or linear) objective over d x d matrices.
///
/// Sensing:          f(W) = 1/2 sum_i (<W, X_i> - y_i)^2
/// FullObservation:  f(W) = 1/2 ||W - W*||_F^2
/// Linear:           f(W) = offset - <W, Q>
///
/// Evaluation accepts general square arrays so that the SVD-based kernel
/// dynamics can use the same objects; for symmetric inputs the gradient is
/// exactly symmetric.
class LossSpec {
 public:
  enum class Kind { Sensing, FullObservation, Linear };

  static LossSpec sensing(int d, std::vector<Measurement> ms);
  static LossSpec full_observation(const SymMat& target);
  static LossSpec linear(const SymMat& Q, double offset);

  Kind kind() const { return kind_; }
  int dim() const { return d_; }
  bool is_quadratic() const { return kind_ != Kind::Linear; }

  const std::vector<Measurement>& measurements() const { return ms_; }
  /// Target for FullObservation, Q for Linear.
  const SymMat& matrix() const { return mat_; }
  double offset() const { return offset_; }

  double value(const SymMat& W) const { return value(W.mat()); }
  SymMat gradient(const SymMat& W) const;

  /// Works for any Eigen square matrix type, including fixed-size ones.
  template <class Mat>
  double value(const Eigen::MatrixBase<Mat>& W) const;
  /// Writes grad f(W) into out. Allocation-free for fixed-size types and for
  /// dynamic ones that already have the right shape.
  template <class Mat, class Out>
  void gradient_into(const Eigen::MatrixBase<Mat>& W, Out& out) const;

  /// D^2 f [Delta]; exact because every supported loss is quadratic.
  Matrix hessian_apply(const Matrix& delta) const;

 private:
  struct Entry {
    int i;
    int j;
    double w;
  };
  // sparse copy of each X, used by the hot paths
  struct Sparse {
    std::vector<Entry> entries;
    double y;
  };

  void check_dim(Eigen::Index rows, Eigen::Index cols) const;
  template <class Mat>
  static double inner(const Sparse& s, const Eigen::MatrixBase<Mat>& W) {
    double acc = 0.0;
    for (const auto& e : s.entries) acc += e.w * W(e.i, e.j);
    return acc;
  }

  Kind kind_ = Kind::Sensing;
  int d_ = 0;
  std::vector<Measurement> ms_;
  std::vector<Sparse> sparse_;
  SymMat mat_;
  double offset_ = 0.0;
};

template <class Mat>
double LossSpec::value(const Eigen::MatrixBase<Mat>& W) const {
  check_dim(W.rows(), W.cols());
  switch (kind_) {
    case Kind::Sensing: {
      double acc = 0.0;
      for (const auto& s : sparse_) {
        const double r = inner(s, W) - s.y;
        acc += r * r;
      }
      return 0.5 * acc;
    }
    case Kind::FullObservation:
      return 0.5 * (W - mat_.mat()).squaredNorm();
    case Kind::Linear:
      return offset_ - W.cwiseProduct(mat_.mat()).sum();
  }
  return 0.0;
}

template <class Mat, class Out>
void LossSpec::gradient_into(const Eigen::MatrixBase<Mat>& W, Out& out) const {
  check_dim(W.rows(), W.cols());
  switch (kind_) {
    case Kind::Sensing:
      out.setZero(d_, d_);
      for (const auto& s : sparse_) {
        const double r = inner(s, W) - s.y;
        for (const auto& e : s.entries) out(e.i, e.j) += r * e.w;
      }
      return;
    case Kind::FullObservation:
      out = W - mat_.mat();
      return;
    case Kind::Linear:
      out = -mat_.mat();
      return;
  }
}

/// f'(W) = (f(W) + f(W^T)) / 2. Every LossSpec here is already invariant
/// under transposition, so this returns a copy.
LossSpec symmetrize_loss(const LossSpec& spec);

/// Completion loss of the 4 x 4 counterexample with observed set
/// {(1,3),(1,4),(2,3),(3,1),(3,2),(4,1)} (1-based). Both orientations of
/// each pair are kept as separate measurements, so
/// f(W) = 1/2 sum_{(i,j) in Omega} (W_ij - M_ij)^2 exactly.
LossSpec build_counterexample_loss(double R);

}  // namespace glrl
