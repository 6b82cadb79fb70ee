#pragma once

#include <vector>

#include "glrl/dynamics.hpp"

namespace glrl {

/// 4 x 4 completion instance on which small-initialization gradient flow
/// converges to a rank-one solution whose nuclear norm is far from minimal.
struct Counterexample4x4 {
  double R = 0.0;
  SymMat M_norm;  ///< minimum nuclear norm completion
  SymMat M_rank;  ///< z z^T with z = (1, R, 1, R)
  LossSpec loss;
};

Counterexample4x4 build_4x4(double R);

struct RefutationRow {
  double scale = 0.0;
  double dist_to_rank = 0.0;
  double dist_to_norm = 0.0;
  double nuclear = 0.0;
  double final_time = 0.0;
  std::int64_t steps = 0;
  Termination termination = Termination::Horizon;
};

struct RefutationReport {
  std::vector<RefutationRow> rows;  ///< in the order of the given scales
  bool pass = false;
};

/// Runs the depth-2 flow from scale * I for every scale up to `horizon` (or
/// until cfg.stop_grad_norm). Passes when the run at the smallest scale ends
/// closer to M_rank than to M_norm with nuclear norm at least 10 * 4R.
RefutationReport verify_gf_refutes_conjecture(const Counterexample4x4& ce,
                                              const std::vector<double>& init_scales,
                                              const IntegratorConfig& cfg, double horizon);

struct XyTrajectory {
  std::vector<double> x, y, energy;
  /// Lifted states (x, y, x, y)(x, y, x, y)^T with the same time stamps.
  Trajectory lifted;
};

/// Planar reduction of the rank-one flow on the 4 x 4 instance:
///   dx/dt = (1 - x^2) x - y (x y - R),   dy/dt = -x (x y - R),
/// started from sqrt(eps) v1 where v1 is the top eigenvector of [[1, R], [R, 0]].
/// Energy g(x, y) = (x^2 - 1)^2 / 2 + (x y - R)^2 decreases along it.
XyTrajectory xy_oracle(double R, double eps, double horizon, const IntegratorConfig& cfg);
double xy_energy(double R, double x, double y);
/// Right-hand side of the planar system.
Eigen::Vector2d xy_rate(double R, double x, double y);

/// Linear loss with -grad f(0) = diag(2, 0.9, 0.8, ..., 0.1) and a diagonal
/// start whose second entry dominates, for depth 4.
struct DeepEscapeInstance {
  SymMat neg_grad0;  ///< -grad f(0)
  SymMat W0;
  int L = 4;
  double alpha = 0.0;
  LossSpec loss;
};

/// W0_22 = 16 alpha, other diagonal entries alpha * Unif[0.9, 1.1].
DeepEscapeInstance build_deep_escape(double alpha, Rng& rng);

struct NoisyEscapeRun {
  double noise = 0.0;
  std::uint64_t seed = 0;
  double final_alignment = 0.0;     ///< |<e1, top eigenvector of W>|
  double final_misalignment = 0.0;  ///< sine of the same angle
  double final_growth = 0.0;        ///< ||W(T)||_F / ||W(0)||_F
  Termination termination = Termination::Horizon;
  Trajectory trajectory;
};

struct DeepEscapeReport {
  Vector blowup_times;  ///< closed-form per-index blow-up times
  int first_index = -1; ///< 0-based index with the smallest time
  bool second_first = false;
  std::vector<NoisyEscapeRun> runs;
};

/// (a) Closed-form blow-up ordering of the noiseless diagonal run.
/// (b) For each noise level and seed, integrates the deep flow from
///     W0 + (alpha eps / 2)(Z + Z^T) up to the overflow guard and reports the
///     final alignment of the top eigenvector with e1.
DeepEscapeReport deep_escape_demo(const DeepEscapeInstance& inst,
                                  const std::vector<double>& noise_eps,
                                  const std::vector<std::uint64_t>& seeds,
                                  const IntegratorConfig& cfg, double horizon);

struct Rank1EscapeReport {
  double final_alignment = 0.0;
  double final_misalignment = 0.0;
  Termination termination = Termination::Horizon;
  Trajectory trajectory;
};

/// Deep flow (depth L) for f(W) = -<W, Q> started from the rank-one
/// M(0) = u0 u0^T. The normalized state aligns with the top eigenvector v1
/// of Q. Throws NoAlignment when <v1, u0> = 0.
Rank1EscapeReport rank1_escape_invariance(int L, const SymMat& Q, const Vector& u0,
                                          const IntegratorConfig& cfg, double horizon);

}  // namespace glrl
