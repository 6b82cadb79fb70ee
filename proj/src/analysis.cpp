#include "glrl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace glrl {

namespace {

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

JacobianOp::JacobianOp(const LossSpec& spec, const SymMat& base)
    : spec_(spec), base_(base), grad_(spec.gradient(base).mat()) {
  require(base.dim() == spec.dim(), ErrorCode::InvalidInput, "JacobianOp: dim mismatch");
}

Matrix JacobianOp::apply(const Matrix& delta) const {
  const Matrix D = sym(delta);
  const Matrix HD = sym(spec_.hessian_apply(D));
  const Matrix& W = base_.mat();
  return -(grad_ * D + D * grad_) - (HD * W + W * HD);
}

Matrix JacobianOp::apply_adjoint(const Matrix& v) const {
  const Matrix V = sym(v);
  const Matrix& W = base_.mat();
  return -(grad_ * V + V * grad_) - sym(spec_.hessian_apply(V * W + W * V));
}

Matrix JacobianOp::apply_fd(const Matrix& delta, double h) const {
  const Matrix D = sym(delta);
  const Matrix& W = base_.mat();
  const Matrix plus = depth2_rate(spec_, Matrix(W + h * D));
  const Matrix minus = depth2_rate(spec_, Matrix(W - h * D));
  return (plus - minus) / (2.0 * h);
}

std::vector<Matrix> sym_basis(int d) {
  std::vector<Matrix> basis;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      Matrix B = Matrix::Zero(d, d);
      B(i, j) = 1.0;
      B(j, i) = 1.0;
      basis.push_back(std::move(B));
    }
  }
  return basis;
}

Matrix from_sym_coords(const Vector& c, int d) {
  Matrix S = Matrix::Zero(d, d);
  Eigen::Index k = 0;
  for (int j = 0; j < d; ++j)
    for (int i = j; i < d; ++i, ++k) {
      S(i, j) = c(k);
      S(j, i) = c(k);
    }
  return S;
}

Matrix JacobianOp::assemble() const {
  const int d = base_.dim();
  const std::vector<Matrix> basis = sym_basis(d);
  const Eigen::Index n = static_cast<Eigen::Index>(basis.size());
  Matrix A(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Matrix out = apply(basis[k]);
    Eigen::Index l = 0;
    for (int j = 0; j < d; ++j)
      for (int i = j; i < d; ++i, ++l) A(l, k) = out(i, j);
  }
  return A;
}

ZeroSpectrum jacobian_at_zero_spectrum(const LossSpec& spec) {
  const int d = spec.dim();
  const EigDecomp e = eig(-spec.gradient(SymMat::zero(d)));
  ZeroSpectrum z;
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      const Vector& ui = e.vectors.col(i);
      const Vector& uj = e.vectors.col(j);
      z.pairs.push_back({e.values(i) + e.values(j), ui * uj.transpose() + uj * ui.transpose()});
    }
  }
  std::stable_sort(z.pairs.begin(), z.pairs.end(),
                   [](const SpectralPair& a, const SpectralPair& b) { return a.value > b.value; });
  z.antisymmetric_zero_dim = d * (d - 1) / 2;
  return z;
}

Matrix factor_hessian_apply(const LossSpec& spec, const Matrix& U, const Matrix& E) {
  const Matrix W = U * U.transpose();
  Matrix G;
  spec.gradient_into(W, G);
  const Matrix HD = spec.hessian_apply(Matrix(U * E.transpose() + E * U.transpose()));
  return G * E + HD * U;
}

ClassifiedSpectrum critical_point_spectrum(const LossSpec& spec, const SymMat& W, int r,
                                           double match_tol, double crit_tol) {
  const int d = spec.dim();
  require(W.dim() == d, ErrorCode::InvalidInput, "critical_point_spectrum: dim mismatch");
  require(r >= 0 && r <= d, ErrorCode::InvalidInput, "rank out of range");
  const double gnorm = depth2_rate(spec, W.mat()).norm();
  require(gnorm <= crit_tol, ErrorCode::InvalidInput,
          "base point is not critical: ||g(W)||_F = " + std::to_string(gnorm));

  ClassifiedSpectrum out;
  const EigDecomp ew = eig(W);

  // type 1: escape pairs from -grad f restricted to the null space of W
  const Matrix Vperp = ew.vectors.rightCols(d - r);
  const Matrix negG = -spec.gradient(W).mat();
  std::vector<Vector> nullvecs;
  Vector mu;
  if (d - r > 0) {
    const EigDecomp en = eig(SymMat(Matrix(Vperp.transpose() * negG * Vperp)));
    mu = en.values;
    for (int i = 0; i < d - r; ++i) nullvecs.push_back(Vperp * en.vectors.col(i));
  }
  for (int i = 0; i < d - r; ++i)
    for (int j = i; j < d - r; ++j) out.type1.push_back(mu(i) + mu(j));

  const JacobianOp J(spec, W);
  for (int i = 0; i < d - r; ++i) {
    for (int j = i; j < d - r; ++j) {
      const Matrix V = nullvecs[i] * nullvecs[j].transpose() + nullvecs[j] * nullvecs[i].transpose();
      const double res = (J.apply_adjoint(V) - (mu(i) + mu(j)) * V).norm() / V.norm();
      out.max_vector_residual = std::max(out.max_vector_residual, res);
    }
  }

  // type 2: -D^2 L(U) on the complement of the rotation orbit {U R : R = -R^T}
  if (r > 0) {
    const Vector lam = ew.values.head(r).cwiseMax(0.0).cwiseSqrt();
    const Matrix U = ew.vectors.leftCols(r) * lam.asDiagonal();
    const Eigen::Index n = static_cast<Eigen::Index>(d) * r;
    Matrix H(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      Matrix E = Matrix::Zero(d, r);
      E(k % d, k / d) = 1.0;
      const Matrix HE = factor_hessian_apply(spec, U, E);
      H.col(k) = Eigen::Map<const Vector>(HE.data(), n);
    }
    H = (-0.5 * (H + H.transpose())).eval();
    // orthonormal basis of the rotation directions, then its complement
    Matrix rot(n, r * (r - 1) / 2);
    Eigen::Index c = 0;
    for (int a = 0; a < r; ++a)
      for (int b = a + 1; b < r; ++b, ++c) {
        Matrix R = Matrix::Zero(r, r);
        R(a, b) = 1.0;
        R(b, a) = -1.0;
        const Matrix UR = U * R;
        rot.col(c) = Eigen::Map<const Vector>(UR.data(), n);
      }
    Matrix Q;
    if (rot.cols() > 0) {
      Eigen::HouseholderQR<Matrix> qr(rot);
      const Matrix full = qr.householderQ();
      Q = full.rightCols(n - rot.cols());
    } else {
      Q = Matrix::Identity(n, n);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q.transpose() * H * Q);
    const Matrix evecs = Q * es.eigenvectors();
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      const double xi = es.eigenvalues()(k);
      out.type2.push_back(xi);
      const Matrix E = Eigen::Map<const Matrix>(evecs.col(k).data(), d, r);
      const Matrix V = E * U.transpose() + U * E.transpose();
      if (V.norm() > 1e-12)
        out.max_vector_residual =
            std::max(out.max_vector_residual, (J.apply(V) - xi * V).norm() / V.norm());
    }
    std::sort(out.type2.begin(), out.type2.end(), std::greater<>());
  }

  // numeric spectrum on the symmetric coordinates
  Eigen::EigenSolver<Matrix> es(J.assemble(), false);
  std::vector<std::complex<double>> numeric(es.eigenvalues().data(),
                                            es.eigenvalues().data() + es.eigenvalues().size());
  std::vector<bool> used(numeric.size(), false);
  struct Pred {
    double v;
    SpectrumType t;
  };
  std::vector<Pred> preds;
  for (double v : out.type1) preds.push_back({v, SpectrumType::EscapePair});
  for (double v : out.type2) preds.push_back({v, SpectrumType::FactorHessian});
  require(preds.size() == numeric.size(), ErrorCode::ClassificationMismatch,
          "predicted and numeric spectrum sizes differ");
  for (const auto& p : preds) {
    std::size_t best = numeric.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      if (used[k]) continue;
      const double dist = std::abs(numeric[k] - p.v);
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    used[best] = true;
    const double rel = best_dist / std::max(1.0, std::abs(p.v));
    out.symmetric.push_back({numeric[best], p.v, p.t, best_dist});
    out.max_residual = std::max(out.max_residual, rel);
    if (rel > match_tol) {
      throw Error(ErrorCode::ClassificationMismatch,
                  "predicted eigenvalue " + std::to_string(p.v) + " nearest numeric " +
                      std::to_string(numeric[best].real()) + " (residual " +
                      std::to_string(best_dist) + ")");
    }
  }

  // type 3: antisymmetric directions are mapped to zero
  const double scale = std::max(1.0, J.assemble().norm());
  for (int j = 0; j < d; ++j)
    for (int i = j + 1; i < d; ++i) {
      Matrix A = Matrix::Zero(d, d);
      A(i, j) = 1.0;
      A(j, i) = -1.0;
      if (J.apply(A).norm() <= 1e-12 * scale) ++out.antisymmetric_zero_count;
    }
  return out;
}

std::vector<double> traj_set_distance(const Trajectory& traj, const std::vector<Matrix>& reference) {
  require(!reference.empty(), ErrorCode::InvalidInput, "empty reference set");
  const Eigen::Index n = static_cast<Eigen::Index>(traj.states.size());
  const Eigen::Index m = static_cast<Eigen::Index>(reference.size());
  if (n == 0) return {};
  const Eigen::Index d = reference.front().rows();
  const Eigen::Index sz = d * reference.front().cols();
  for (const auto& r : reference)
    require(r.size() == sz, ErrorCode::InvalidInput, "reference dim mismatch");
  for (const auto& s : traj.states)
    require(s.size() == sz, ErrorCode::InvalidInput, "trajectory dim mismatch");

  Matrix A(sz, n), B(sz, m);
  for (Eigen::Index i = 0; i < n; ++i)
    A.col(i) = Eigen::Map<const Vector>(traj.states[i].data(), sz);
  for (Eigen::Index j = 0; j < m; ++j)
    B.col(j) = Eigen::Map<const Vector>(reference[j].data(), sz);
  const Vector an = A.colwise().squaredNorm().transpose();
  const Vector bn = B.colwise().squaredNorm().transpose();
  const double bmax = bn.maxCoeff();
  const Matrix cross = A.transpose() * B;

  std::vector<double> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // screen with the expanded form, then confirm the close ones exactly
    Vector approx = (an(i) + bn.array()).matrix() - 2.0 * cross.row(i).transpose();
    const double lo = approx.minCoeff();
    const double slack = 1e-9 * (an(i) + bmax) + 1e-300;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (approx(j) > lo + slack) continue;
      best = std::min(best, (A.col(i) - B.col(j)).squaredNorm());
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

std::vector<double> traj_set_distance(const Trajectory& traj, const Trajectory& reference) {
  return traj_set_distance(traj, reference.states);
}

namespace {

Vector top_vector(const Matrix& W) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(W));
  return es.eigenvectors().col(W.rows() - 1);
}

}  // namespace

std::vector<double> alignment(const Trajectory& traj, const Vector& v) {
  std::vector<double> out;
  for (const auto& W : traj.states) {
    require(W.rows() == v.size(), ErrorCode::InvalidInput, "alignment: dim mismatch");
    out.push_back(std::abs(v.dot(top_vector(W))) / v.norm());
  }
  return out;
}

std::vector<double> misalignment(const Trajectory& traj, const Vector& v) {
  const Vector n = v / v.norm();
  std::vector<double> out;
  for (const auto& W : traj.states) {
    require(W.rows() == v.size(), ErrorCode::InvalidInput, "misalignment: dim mismatch");
    const Vector u = top_vector(W);
    out.push_back((u - n * n.dot(u)).norm());
  }
  return out;
}

SlopeFit scaling_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), ErrorCode::InvalidInput, "xs and ys differ in length");
  require(xs.size() >= 3, ErrorCode::InvalidInput, "need at least 3 points");
  const std::size_t n = xs.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(xs[i] > 0.0 && ys[i] > 0.0, ErrorCode::InvalidInput, "values must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  require(sxx > 0.0, ErrorCode::InvalidInput, "xs must not all be equal");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace glrl
