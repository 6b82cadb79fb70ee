#pragma once

#include <string>
#include <vector>

#include "glrl/dynamics.hpp"

namespace glrl {

struct GlrlConfig {
  /// Size of the escape perturbation: each phase starts from W + eps u u^T.
  double epsilon = 1e-7;
  /// Inner GD settings. A zero stop_grad_norm is replaced by
  /// 1e-9 * max(1, ||grad f(0)||_F).
  IntegratorConfig inner = [] {
    IntegratorConfig c;
    c.scheme = Scheme::Euler;
    c.step = 1e-3;
    c.max_steps = 10'000'000;
    c.record_every = 100;
    return c;
  }();
  /// Upper bound on the number of phases; 0 means d.
  int max_rank = 0;
  /// Loop exits once lambda_1(-grad f(W_r)) <= exit_tol.
  double exit_tol = 1e-8;
  int depth = 2;
  /// Warn when the escape eigenvalue is separated by less than this.
  double degenerate_gap = 1e-8;

  void validate(int d) const;
};

struct GlrlPhase {
  int rank = 0;
  double escape_eigenvalue = 0.0;  ///< lambda_1(-grad f(W_{r-1}))
  Vector escape_vector;            ///< u_r
  double escape_gap = 0.0;
  Trajectory trajectory;
  Matrix critical_point;  ///< W_r at the end of the inner loop
  std::vector<Matrix> factors;
  double final_grad_norm = 0.0;
  bool converged = false;  ///< inner loop met its stationarity threshold
};

struct GlrlReport {
  std::vector<GlrlPhase> phases;
  bool converged = false;
  Matrix final_W;
  double final_lambda1 = 0.0;  ///< lambda_1(-grad f(final_W))
  bool rank_budget_exhausted = false;
  bool diverged = false;
  std::vector<int> phases_not_converged;
  std::vector<std::string> warnings;
};

/// Greedy low-rank learning at depth 2: grow U one column at a time along the
/// top eigenvector of -grad f and run GD on L(U) = f(U U^T) / 2 in between.
GlrlReport glrl_run(const LossSpec& spec, const GlrlConfig& cfg);

/// Deep variant (depth L >= 3). Every phase pads the factors with
/// eps^{1/L}-sized blocks so that the product grows by eps u u^T.
GlrlReport deep_glrl_run(const LossSpec& spec, const GlrlConfig& cfg);

/// Phase-r starting factors of the deep variant given the previous phase's
/// factors (empty for r = 1).
std::vector<Matrix> deep_glrl_init(const std::vector<Matrix>& prev, const Vector& u,
                                   double epsilon, int L);

/// (1 / (2 mu1)) ln(1 / eps): the time a flow started eps away from a saddle
/// needs to leave it along the top escape direction.
double glrl_time_shift(double epsilon, double mu1);

/// Flow of phase r (1-based) started from W_{r-1} + eps u_r u_r^T, sampled at
/// t + glrl_time_shift(eps, mu1) for every t in t_grid. Returned times are the
/// unshifted t_grid values.
Trajectory glrl_trajectory_shifted(const LossSpec& spec, const GlrlConfig& cfg,
                                   const GlrlReport& report, int r,
                                   const std::vector<double>& t_grid);

}  // namespace glrl
