#pragma once

#include <vector>

#include "glrl/losses.hpp"

namespace glrl {

struct R1mpState {
  std::vector<Vector> basis;  ///< unit vectors u_1..u_r
  Vector coefficients;        ///< alpha
  SymMat residual_gradient;   ///< grad f at the current estimate

  /// sum_i alpha_i u_i u_i^T
  SymMat estimate(int d) const;
};

struct R1mpStep {
  int rank = 0;
  double loss = 0.0;
  double lambda1 = 0.0;  ///< lambda_1(-grad f) after the refit
  bool ridge_used = false;
};

struct R1mpResult {
  SymMat estimate;
  R1mpState state;
  std::vector<R1mpStep> history;
  bool converged = false;
};

/// Rank-one matrix pursuit: add the top eigenvector of -grad f to the basis,
/// then refit all coefficients by solving the normal equations of the
/// quadratic objective restricted to span{u_i u_i^T}.
R1mpResult r1mp_run(const LossSpec& spec, int max_rank, double exit_tol = 1e-8);

struct ProxConfig {
  int steps_per_stage = 500;
  double feas_tol = 1e-8;
  /// Lipschitz constant of grad f; 0 means estimate by power iteration.
  double lipschitz = 0.0;
  /// Restrict to the PSD cone: the prox keeps max(lambda - tau, 0). Without
  /// it the symmetric problem can have non-PSD minimizers of equal norm.
  bool psd = true;
};

/// Default continuation: lambda_0 = ||grad f(0)||_2, halved at each of
/// `stages` stages.
std::vector<double> default_lambda_path(const LossSpec& spec, int stages = 40,
                                        double factor = 0.5);

struct NuclearMinResult {
  SymMat W;
  double loss = 0.0;
  double nuclear = 0.0;
  int total_steps = 0;
};

/// Approximate min ||W||_* subject to f(W) = 0, as the small-lambda end of a
/// continuation path for min f(W) + lambda ||W||_*. Each stage runs proximal
/// gradient steps with eigenvalue soft-thresholding (the nuclear-norm prox on
/// symmetric matrices). Throws Infeasible when the final loss exceeds
/// cfg.feas_tol.
NuclearMinResult nuclear_min(const LossSpec& spec, const std::vector<double>& lambda_path,
                             const ProxConfig& cfg = {});

/// Largest eigenvalue of the (constant) Hessian of f on symmetric matrices.
double hessian_norm(const LossSpec& spec, int iterations = 200);

/// prox of tau ||.||_*: sign(lambda) max(|lambda| - tau, 0) on each eigenvalue.
SymMat eig_soft_threshold(const SymMat& A, double tau);

/// prox of tau ||.||_* plus the PSD indicator: max(lambda - tau, 0).
SymMat psd_soft_threshold(const SymMat& A, double tau);

}  // namespace glrl
