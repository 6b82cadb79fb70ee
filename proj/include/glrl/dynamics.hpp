#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "glrl/losses.hpp"

namespace glrl {

enum class Scheme { Euler, RK4, AdaptiveGD };

/// RMSprop-style step rule:
///   v_{t+1} = alpha v_t + (1 - alpha) ||grad_t||^2
///   eta_t   = eta / (sqrt(v_{t+1} / (1 - alpha^{t+1})) + epsilon)
struct AdaptiveParams {
  double alpha = 0.99;
  double epsilon = 1e-4;
};

struct IntegratorConfig {
  Scheme scheme = Scheme::RK4;
  double step = 1e-3;
  std::optional<AdaptiveParams> adaptive;
  std::int64_t max_steps = 100'000'000;
  /// Stop once the norm of the integrated vector field drops to this value.
  double stop_grad_norm = 0.0;
  std::int64_t record_every = 1;
  /// Terminate with Diverged when ||W||_F reaches this value.
  double overflow_guard = 1e12;
  /// When positive, caps every step at max_relative_step * ||x|| / ||rate||.
  /// Lets finite-time blow-up runs approach the singularity gracefully.
  double max_relative_step = 0.0;
  /// When non-empty, recording happens exactly at these times (plus t = 0 and
  /// the final time) and record_every is ignored. Must be increasing.
  std::vector<double> sample_times;
  /// When positive, a state is also recorded whenever it has moved at least
  /// this far (Frobenius) from the last recorded state.
  double record_min_dist = 0.0;
  /// Compute eigenvalue and low-rankness diagnostics at recorded steps.
  bool diagnostics = true;
  SymTolerances tol;

  void validate() const;
};

/// Table 1 presets: constant step for depth 2, adaptive for depths 3 and 4.
IntegratorConfig table1_config(int depth);

enum class Termination { Horizon, Stationary, MaxSteps, Diverged };
std::string_view to_string(Termination t);

/// Recorded run of one of the flows. States are plain square arrays because
/// the kernel dynamics accept general matrices; every other flow produces
/// symmetric states.
struct Trajectory {
  std::vector<double> times;
  std::vector<Matrix> states;
  std::vector<double> loss;
  /// Frobenius norm of the integrated vector field (dW/dt, dU/dt, ...).
  std::vector<double> grad_norm;
  /// Eigenvalues of sym(W), descending (empty when diagnostics are off).
  std::vector<Vector> eigenvalues;
  /// lowrank[k](r) = r-low-rankness of W, r = 0..d-1.
  std::vector<Vector> lowrank;

  std::int64_t steps = 0;
  Termination termination = Termination::Horizon;
  std::vector<std::string> warnings;
  /// Final factor matrices for the factored runs (empty for end-to-end flows).
  std::vector<Matrix> factors;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  const Matrix& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
  int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().rows()); }
};

/// Appends one recorded state (with eigenvalue and low-rankness diagnostics
/// when `diagnostics` is set) to a trajectory.
void append_state(Trajectory& tr, double t, const Matrix& W, double loss, double grad_norm,
                  bool diagnostics = true);

/// Factors U_1..U_L of a deep linear network with W = U_1 U_2 ... U_L.
struct DeepFactorState {
  int depth = 2;
  std::vector<Matrix> factors;
  double balanced_tol = 1e-12;

  Matrix product() const;
  /// max_i ||U_i^T U_i - U_{i+1} U_{i+1}^T||_F
  double imbalance() const;
};

/// Deterministic 64-bit generator used throughout.
using Rng = std::mt19937_64;

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the sign
/// of R's diagonal folded in).
Matrix random_orthogonal(int d, Rng& rng);

/// U_i = V_i D^{1/L} V_{i+1}^T with V_{L+1} = V_1, random orthogonal V_i and
/// random nonnegative diagonal D with ||D||_F = scale. Then W = V_1 D V_1^T.
DeepFactorState balanced_init(int d, int L, double scale, Rng& rng);
/// Same with a caller-supplied diagonal.
DeepFactorState balanced_init(const Vector& diag, int L, Rng& rng);
/// Balanced factorization of a given PSD W0: U_i = W0^{1/L} for every i.
DeepFactorState balanced_from_psd(const SymMat& W0, int L, const SymTolerances& tol = {});

/// dW/dt = -(W grad f(W) + grad f(W) W) for symmetric W.
Matrix depth2_rate(const LossSpec& spec, const Matrix& W);

/// Depth-2 end-to-end gradient flow.
Trajectory flow_depth2(const LossSpec& spec, const SymMat& W0, const IntegratorConfig& cfg,
                       double horizon);

/// Gradient descent on U for L(U) = f(U U^T) / 2, recording W = U U^T.
Trajectory gd_factored(const LossSpec& spec, const Matrix& U0, const IntegratorConfig& cfg,
                       double horizon);

/// Balanced deep flow (L >= 3) integrated through M = W^{2/L}:
///   dM/dt = -(grad f(W) W + W grad f(W)),  W = M^{L/2}.
/// The recorded states are W.
Trajectory flow_deep(const LossSpec& spec, const SymMat& W0, int L, const IntegratorConfig& cfg,
                     double horizon);

/// Same flow started directly from M(0) = M0 (PSD).
Trajectory flow_deep_from_m(const LossSpec& spec, const SymMat& M0, int L,
                            const IntegratorConfig& cfg, double horizon);

/// Simultaneous GD on all factors of L(U_1..U_L) = f(U_1 ... U_L).
Trajectory gd_deep_factored(const LossSpec& spec, const DeepFactorState& state,
                            const IntegratorConfig& cfg, double horizon);

/// Depth value meaning L = infinity for the kernel routines.
inline constexpr double kInfiniteDepth = std::numeric_limits<double>::infinity();

/// Hadamard kernel of the depth-L end-to-end dynamics in the SVD basis.
///   K_ii = s_i^{2-2/L},  K_ij = (s_i^2 - s_j^2) / (L (s_i^{2/L} - s_j^{2/L}))
/// L = kInfiniteDepth gives the limit K*_ij = (s_i^2 - s_j^2) / (ln s_i^2 - ln s_j^2).
Matrix kernel_matrix(const Vector& sigmas, double L);

/// Right-hand side of the kernel dynamics in normalized time tau = L t:
///   dW/dtau = -U ((U^T grad f(W) V) o K) V^T,  W = U S V^T.
Matrix kernel_rate(const LossSpec& spec, const Matrix& W, double L);

/// Kernel-form end-to-end flow for depth L >= 1 (or infinite). Times in the
/// returned trajectory are normalized times tau = L t; at L = 2 this means
/// W(tau) equals the depth-2 flow at t = tau / 2.
Trajectory flow_kernel_depth(const LossSpec& spec, const Matrix& W0, double L,
                             const IntegratorConfig& cfg, double horizon);

/// sigma(t) = alpha mu / (alpha + (mu - alpha) e^{-2 mu t}); alpha / (1 + 2 alpha t)
/// when mu = 0.
double sigma_closed_form(double alpha, double mu, double t);

/// Componentwise (m0^{-(P-1)} - 2 mu (P-1) t)^{-1/(P-1)}; zero entries stay
/// zero. Throws BlowUpError for the earliest component whose blow-up time is
/// at or before t.
Vector deep_diag_closed_form(const Vector& m0, const Vector& mu, double P, double t);

/// Blow-up times m0^{-(P-1)} / (2 mu (P-1)); +inf where no blow-up happens.
Vector deep_diag_blowup_times(const Vector& m0, const Vector& mu, double P);

/// e^{tQ} W0 e^{tQ}: exact depth-2 flow for f(W) = offset - <W, Q>.
SymMat linear_flow_closed_form(const SymMat& Q, const SymMat& W0, double t);

}  // namespace glrl
