// Finite and infinite depth kernel form of the end-to-end dynamics.
#include <cmath>

#include "glrl/dynamics.hpp"
#include "integrator.hpp"

namespace glrl {

namespace {

void check_depth(double L) {
  const bool inf = std::isinf(L) && L > 0.0;
  require(inf || (L >= 1.0 && L == std::floor(L)), ErrorCode::InvalidInput,
          "depth must be an integer >= 1 or infinite");
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, 1.0); }

}  // namespace

Matrix kernel_matrix(const Vector& sigmas, double L) {
  check_depth(L);
  require((sigmas.array() >= 0.0).all(), ErrorCode::InvalidInput, "singular values must be >= 0");
  const Eigen::Index n = sigmas.size();
  const bool inf = std::isinf(L);
  Matrix K(n, n);
  auto diag = [&](double s) { return inf ? s * s : std::pow(s, 2.0 - 2.0 / L); };
  for (Eigen::Index i = 0; i < n; ++i) {
    const double si = sigmas(i);
    for (Eigen::Index j = i; j < n; ++j) {
      const double sj = sigmas(j);
      if (i == j || close(si, sj)) {
        K(i, j) = K(j, i) = diag(si);
        continue;
      }
      if (inf) {
        // a zero singular value sends the log difference to infinity
        K(i, j) = (si == 0.0 || sj == 0.0)
                      ? 0.0
                      : (si * si - sj * sj) / (2.0 * (std::log(si) - std::log(sj)));
        K(j, i) = K(i, j);
        continue;
      }
      double denom;
      if (si > 0.0 && sj > 0.0) {
        // L (s_i^{2/L} - s_j^{2/L}) without cancellation for large L
        denom = L * std::pow(sj, 2.0 / L) * std::expm1((2.0 / L) * (std::log(si) - std::log(sj)));
      } else {
        denom = L * (std::pow(si, 2.0 / L) - std::pow(sj, 2.0 / L));
      }
      K(i, j) = K(j, i) = (si * si - sj * sj) / denom;
    }
  }
  return K;
}

Matrix kernel_rate(const LossSpec& spec, const Matrix& W, double L) {
  Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& U = svd.matrixU();
  const Matrix& V = svd.matrixV();
  Matrix G;
  spec.gradient_into(W, G);
  const Matrix K = kernel_matrix(svd.singularValues(), L);
  const Matrix inner = (U.transpose() * G * V).cwiseProduct(K);
  return -(U * inner * V.transpose());
}

Trajectory flow_kernel_depth(const LossSpec& spec, const Matrix& W0, double L,
                             const IntegratorConfig& cfg, double horizon) {
  check_depth(L);
  require(W0.rows() == spec.dim() && W0.cols() == spec.dim(), ErrorCode::InvalidInput,
          "flow_kernel_depth: dim mismatch");
  auto rate = [&](const Matrix& W, Matrix& out) { out = kernel_rate(spec, W, L); };
  auto to_w = [](const Matrix& W) { return W; };
  auto loss = [&](const Matrix& w) { return spec.value(w); };
  auto norm = [](const Matrix& W) { return W.norm(); };
  Matrix W = W0;
  return detail::integrate(W, rate, to_w, loss, norm, cfg, horizon);
}

}  // namespace glrl
