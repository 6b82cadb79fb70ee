#include "glrl/losses.hpp"

#include <cmath>
#include <string>

namespace glrl {

Measurement entry_measurement(int d, int p, int q, double y) {
  require(p >= 0 && p < d && q >= 0 && q < d, ErrorCode::InvalidInput,
          "entry_measurement: index out of range");
  Matrix X = Matrix::Zero(d, d);
  X(p, q) += 0.5;
  X(q, p) += 0.5;
  return {SymMat(X), y};
}

LossSpec LossSpec::sensing(int d, std::vector<Measurement> ms) {
  require(d >= 1, ErrorCode::InvalidInput, "sensing: dim must be >= 1");
  LossSpec s;
  s.kind_ = Kind::Sensing;
  s.d_ = d;
  s.mat_ = SymMat::zero(d);
  s.sparse_.reserve(ms.size());
  for (const auto& m : ms) {
    require(m.X.dim() == d, ErrorCode::InvalidInput, "sensing: measurement dim mismatch");
    require(std::isfinite(m.y), ErrorCode::InvalidInput, "sensing: non-finite y");
    Sparse sp{{}, m.y};
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (m.X(i, j) != 0.0) sp.entries.push_back({i, j, m.X(i, j)});
    s.sparse_.push_back(std::move(sp));
  }
  s.ms_ = std::move(ms);
  return s;
}

LossSpec LossSpec::full_observation(const SymMat& target) {
  require(target.all_finite(), ErrorCode::InvalidInput, "full_observation: non-finite target");
  LossSpec s;
  s.kind_ = Kind::FullObservation;
  s.d_ = target.dim();
  s.mat_ = target;
  return s;
}

LossSpec LossSpec::linear(const SymMat& Q, double offset) {
  require(Q.all_finite(), ErrorCode::InvalidInput, "linear: non-finite Q");
  LossSpec s;
  s.kind_ = Kind::Linear;
  s.d_ = Q.dim();
  s.mat_ = Q;
  s.offset_ = offset;
  return s;
}

void LossSpec::check_dim(Eigen::Index rows, Eigen::Index cols) const {
  if (rows != d_ || cols != d_) {
    throw Error(ErrorCode::InvalidInput, "loss expects " + std::to_string(d_) + "x" +
                                             std::to_string(d_) + " input, got " +
                                             std::to_string(rows) + "x" + std::to_string(cols));
  }
}

SymMat LossSpec::gradient(const SymMat& W) const {
  Matrix g;
  gradient_into(W.mat(), g);
  // already symmetric for symmetric W; the constructor re-averages exactly
  return SymMat(std::move(g));
}

Matrix LossSpec::hessian_apply(const Matrix& delta) const {
  check_dim(delta.rows(), delta.cols());
  switch (kind_) {
    case Kind::Sensing: {
      Matrix out = Matrix::Zero(d_, d_);
      for (const auto& s : sparse_) {
        const double c = inner(s, delta);
        for (const auto& e : s.entries) out(e.i, e.j) += c * e.w;
      }
      return out;
    }
    case Kind::FullObservation:
      return delta;
    case Kind::Linear:
      return Matrix::Zero(d_, d_);
  }
  return Matrix::Zero(d_, d_);
}

LossSpec symmetrize_loss(const LossSpec& spec) { return spec; }

LossSpec build_counterexample_loss(double R) {
  require(R > 1.0, ErrorCode::InvalidInput, "counterexample loss needs R > 1");
  // 0-based (row, col, value) for Omega
  const struct {
    int p, q;
    double v;
  } omega[] = {{0, 2, 1.0}, {0, 3, R}, {1, 2, R}, {2, 0, 1.0}, {2, 1, R}, {3, 0, R}};
  std::vector<Measurement> ms;
  for (const auto& o : omega) ms.push_back(entry_measurement(4, o.p, o.q, o.v));
  return LossSpec::sensing(4, std::move(ms));
}

}  // namespace glrl
