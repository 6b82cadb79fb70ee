#include "glrl/baselines.hpp"

#include <cmath>

namespace glrl {

SymMat R1mpState::estimate(int d) const {
  Matrix W = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < basis.size(); ++i)
    W += coefficients(static_cast<Eigen::Index>(i)) * basis[i] * basis[i].transpose();
  return SymMat(W);
}

R1mpResult r1mp_run(const LossSpec& spec, int max_rank, double exit_tol) {
  const int d = spec.dim();
  require(max_rank >= 1 && max_rank <= d, ErrorCode::InvalidInput, "max_rank must lie in [1, d]");
  if (!spec.is_quadratic())
    throw Error(ErrorCode::Unsupported, "R1MP refit needs a quadratic loss");

  R1mpResult res;
  R1mpState& st = res.state;
  st.coefficients.resize(0);
  const Matrix g0 = spec.gradient(SymMat::zero(d)).mat();
  // basis matrices B_i and their Hessian images D^2f[B_i]
  std::vector<Matrix> B, HB;
  SymMat W = SymMat::zero(d);

  for (int r = 1;; ++r) {
    st.residual_gradient = spec.gradient(W);
    const TopEigPair top = top_eigpair(-st.residual_gradient);
    if (top.value <= exit_tol) {
      res.converged = true;
      break;
    }
    if (r > max_rank) break;

    st.basis.push_back(top.vector);
    B.push_back(top.vector * top.vector.transpose());
    HB.push_back(spec.hessian_apply(B.back()));

    // f(sum a_i B_i) = f(0) + <g0, sum a_i B_i> + 1/2 sum a_i a_j <B_i, D^2f[B_j]>
    const int n = static_cast<int>(B.size());
    Matrix H(n, n);
    Vector b(n);
    for (int i = 0; i < n; ++i) {
      b(i) = -B[i].cwiseProduct(g0).sum();
      for (int j = 0; j < n; ++j) H(i, j) = B[i].cwiseProduct(HB[j]).sum();
    }
    H = (0.5 * (H + H.transpose())).eval();
    R1mpStep step;
    step.rank = r;
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) {
      step.ridge_used = true;
      llt.compute(H + 1e-12 * Matrix::Identity(n, n));
      require(llt.info() == Eigen::Success, ErrorCode::InvalidInput,
              "R1MP normal equations are not positive semidefinite");
    }
    st.coefficients = llt.solve(b);
    W = st.estimate(d);
    step.loss = spec.value(W);
    step.lambda1 = top_eigpair(-spec.gradient(W)).value;
    res.history.push_back(step);
  }
  res.estimate = W;
  return res;
}

double hessian_norm(const LossSpec& spec, int iterations) {
  const int d = spec.dim();
  // deterministic, generic start
  Matrix X(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = 1.0 + 0.1 * std::sin(1.0 + i + 7.0 * j);
  X = (0.5 * (X + X.transpose())).eval();
  X /= X.norm();
  double lam = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Matrix Y = spec.hessian_apply(X);
    Y = (0.5 * (Y + Y.transpose())).eval();
    const double n = Y.norm();
    if (n == 0.0) return 0.0;
    lam = n;
    X = Y / n;
  }
  return lam;
}

SymMat eig_soft_threshold(const SymMat& A, double tau) {
  const EigDecomp e = eig(A);
  Vector s = e.values;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double m = std::max(std::abs(s(i)) - tau, 0.0);
    s(i) = s(i) < 0.0 ? -m : m;
  }
  return SymMat(Matrix(e.vectors * s.asDiagonal() * e.vectors.transpose()));
}

SymMat psd_soft_threshold(const SymMat& A, double tau) {
  const EigDecomp e = eig(A);
  const Vector s = (e.values.array() - tau).max(0.0).matrix();
  return SymMat(Matrix(e.vectors * s.asDiagonal() * e.vectors.transpose()));
}

std::vector<double> default_lambda_path(const LossSpec& spec, int stages, double factor) {
  require(stages >= 1, ErrorCode::InvalidInput, "need at least one stage");
  require(factor > 0.0 && factor < 1.0, ErrorCode::InvalidInput, "factor must lie in (0,1)");
  double lam = spectral_norm(spec.gradient(SymMat::zero(spec.dim())));
  std::vector<double> path;
  for (int s = 0; s < stages; ++s) {
    path.push_back(lam);
    lam *= factor;
  }
  return path;
}

NuclearMinResult nuclear_min(const LossSpec& spec, const std::vector<double>& lambda_path,
                             const ProxConfig& cfg) {
  require(spec.kind() == LossSpec::Kind::Sensing, ErrorCode::InvalidInput,
          "nuclear_min expects a sensing loss");
  require(!lambda_path.empty(), ErrorCode::InvalidInput, "empty lambda path");
  for (std::size_t i = 0; i < lambda_path.size(); ++i) {
    require(lambda_path[i] > 0.0, ErrorCode::InvalidInput, "lambda values must be positive");
    require(i == 0 || lambda_path[i] < lambda_path[i - 1], ErrorCode::InvalidInput,
            "lambda path must be descending");
  }
  const int d = spec.dim();
  const double Lf = cfg.lipschitz > 0.0 ? cfg.lipschitz : hessian_norm(spec);
  NuclearMinResult res;
  SymMat W = SymMat::zero(d);
  if (Lf == 0.0) {
    // f is constant: the minimum-norm point is 0
    res.W = W;
    res.loss = spec.value(W);
    if (res.loss > cfg.feas_tol) throw Error(ErrorCode::Infeasible, "constant positive loss");
    return res;
  }
  const double step = 1.0 / Lf;
  for (double lam : lambda_path) {
    for (int k = 0; k < cfg.steps_per_stage; ++k) {
      const SymMat Y = W - step * spec.gradient(W);
      W = cfg.psd ? psd_soft_threshold(Y, step * lam) : eig_soft_threshold(Y, step * lam);
      ++res.total_steps;
    }
  }
  res.W = W;
  res.loss = spec.value(W);
  res.nuclear = nuclear_norm(W);
  if (!(res.loss <= cfg.feas_tol)) {
    throw Error(ErrorCode::Infeasible,
                "loss " + std::to_string(res.loss) + " above feasibility tolerance");
  }
  return res;
}

}  // namespace glrl
