#include "glrl/glrl.hpp"

#include <cmath>

namespace glrl {

void GlrlConfig::validate(int d) const {
  require(epsilon > 0.0, ErrorCode::InvalidInput, "epsilon must be positive");
  require(max_rank >= 0 && max_rank <= d, ErrorCode::InvalidInput, "max_rank must lie in [1, d]");
  require(exit_tol >= 0.0, ErrorCode::InvalidInput, "exit_tol must be nonnegative");
  require(depth >= 2, ErrorCode::InvalidInput, "depth must be >= 2");
  inner.validate();
}

namespace {

struct Loop {
  const LossSpec& spec;
  const GlrlConfig& cfg;
  IntegratorConfig inner;
  int max_rank;

  Loop(const LossSpec& s, const GlrlConfig& c) : spec(s), cfg(c), inner(c.inner) {
    const int d = s.dim();
    c.validate(d);
    max_rank = c.max_rank == 0 ? d : c.max_rank;
    if (inner.stop_grad_norm == 0.0) {
      const double g0 = s.gradient(SymMat::zero(d)).frobenius();
      inner.stop_grad_norm = 1e-9 * std::max(1.0, g0);
    }
  }

  /// Runs phases until exit; `phase(r, W_prev, u, report)` performs the inner
  /// loop of phase r and appends its record.
  template <class PhaseFn>
  GlrlReport run(PhaseFn&& phase) {
    GlrlReport rep;
    const int d = spec.dim();
    Matrix W = Matrix::Zero(d, d);
    for (int r = 1;; ++r) {
      const TopEigPair top = top_eigpair(-spec.gradient(SymMat(W)));
      rep.final_W = W;
      rep.final_lambda1 = top.value;
      if (top.value <= cfg.exit_tol) {
        rep.converged = true;
        break;
      }
      if (r > max_rank) {
        rep.rank_budget_exhausted = true;
        break;
      }
      if (d > 1 && top.gap < cfg.degenerate_gap)
        rep.warnings.push_back("DegenerateEscape(" + std::to_string(r) + ")");
      GlrlPhase p;
      p.rank = r;
      p.escape_eigenvalue = top.value;
      p.escape_vector = top.vector;
      p.escape_gap = top.gap;
      phase(r, p);
      const Termination term = p.trajectory.termination;
      p.converged = term == Termination::Stationary;
      if (!p.converged) rep.phases_not_converged.push_back(r);
      for (const auto& w : p.trajectory.warnings) rep.warnings.push_back(w);
      W = p.trajectory.final_state();
      p.critical_point = W;
      p.final_grad_norm = p.trajectory.grad_norm.back();
      rep.phases.push_back(std::move(p));
      if (term == Termination::Diverged) {
        rep.diverged = true;
        rep.final_W = W;
        rep.final_lambda1 = top_eigpair(-spec.gradient(SymMat(W))).value;
        break;
      }
    }
    return rep;
  }
};

constexpr double kForever = std::numeric_limits<double>::infinity();

}  // namespace

GlrlReport glrl_run(const LossSpec& spec, const GlrlConfig& cfg) {
  require(cfg.depth == 2, ErrorCode::InvalidInput, "glrl_run is the depth-2 algorithm");
  Loop loop(spec, cfg);
  Matrix U(spec.dim(), 0);
  return loop.run([&](int, GlrlPhase& p) {
    Matrix U0(U.rows(), U.cols() + 1);
    U0 << U, std::sqrt(cfg.epsilon) * p.escape_vector;
    p.trajectory = gd_factored(spec, U0, loop.inner, kForever);
    U = p.trajectory.factors.front();
    p.factors = p.trajectory.factors;
  });
}

std::vector<Matrix> deep_glrl_init(const std::vector<Matrix>& prev, const Vector& u,
                                   double epsilon, int L) {
  require(L >= 2, ErrorCode::InvalidInput, "depth must be >= 2");
  require(prev.empty() || static_cast<int>(prev.size()) == L, ErrorCode::InvalidInput,
          "previous factors must have one entry per layer");
  const double e = std::pow(epsilon, 1.0 / L);
  const Eigen::Index d = u.size();
  const Eigen::Index r = prev.empty() ? 0 : prev.front().cols();
  std::vector<Matrix> out;
  out.reserve(L);

  Matrix first(d, r + 1);
  if (r > 0) first.leftCols(r) = prev.front();
  first.col(r) = e * u;
  out.push_back(std::move(first));

  for (int i = 1; i + 1 < L; ++i) {
    Matrix mid = Matrix::Zero(r + 1, r + 1);
    if (r > 0) mid.topLeftCorner(r, r) = prev[i];
    mid(r, r) = e;
    out.push_back(std::move(mid));
  }

  Matrix last(r + 1, d);
  if (r > 0) last.topRows(r) = prev.back();
  last.row(r) = e * u.transpose();
  out.push_back(std::move(last));
  return out;
}

GlrlReport deep_glrl_run(const LossSpec& spec, const GlrlConfig& cfg) {
  require(cfg.depth >= 3, ErrorCode::InvalidInput, "deep_glrl_run needs depth >= 3");
  Loop loop(spec, cfg);
  std::vector<Matrix> factors;
  return loop.run([&](int, GlrlPhase& p) {
    DeepFactorState st;
    st.depth = cfg.depth;
    st.factors = deep_glrl_init(factors, p.escape_vector, cfg.epsilon, cfg.depth);
    st.balanced_tol = std::max(1e-10, st.imbalance());
    p.trajectory = gd_deep_factored(spec, st, loop.inner, kForever);
    factors = p.trajectory.factors;
    p.factors = factors;
  });
}

double glrl_time_shift(double epsilon, double mu1) {
  if (mu1 <= 0.0) throw Error(ErrorCode::NoEscape, "escape eigenvalue must be positive");
  require(epsilon > 0.0, ErrorCode::InvalidInput, "epsilon must be positive");
  return std::log(1.0 / epsilon) / (2.0 * mu1);
}

Trajectory glrl_trajectory_shifted(const LossSpec& spec, const GlrlConfig& cfg,
                                   const GlrlReport& report, int r,
                                   const std::vector<double>& t_grid) {
  require(r >= 1 && r <= static_cast<int>(report.phases.size()), ErrorCode::InvalidInput,
          "no record for phase " + std::to_string(r));
  const GlrlPhase& ph = report.phases[r - 1];
  const double shift = glrl_time_shift(cfg.epsilon, ph.escape_eigenvalue);
  if (t_grid.empty()) return {};

  const int d = spec.dim();
  const Matrix prev = r == 1 ? Matrix::Zero(d, d) : report.phases[r - 2].critical_point;
  const Matrix W0 = prev + cfg.epsilon * ph.escape_vector * ph.escape_vector.transpose();

  IntegratorConfig c = cfg.inner;
  c.stop_grad_norm = 0.0;
  c.record_min_dist = 0.0;
  c.sample_times.clear();
  for (double t : t_grid) {
    require(t + shift >= 0.0, ErrorCode::InvalidInput,
            "t_grid reaches before the start of the phase");
    c.sample_times.push_back(t + shift);
  }
  Trajectory full = flow_depth2(spec, SymMat(W0), c, c.sample_times.back());

  // keep only the requested samples and undo the shift
  Trajectory out;
  out.steps = full.steps;
  out.termination = full.termination;
  out.warnings = full.warnings;
  std::size_t k = 0;
  for (std::size_t i = 0; i < full.size() && k < t_grid.size(); ++i) {
    if (full.times[i] != c.sample_times[k]) continue;
    out.times.push_back(t_grid[k]);
    out.states.push_back(full.states[i]);
    out.loss.push_back(full.loss[i]);
    out.grad_norm.push_back(full.grad_norm[i]);
    if (!full.eigenvalues.empty()) {
      out.eigenvalues.push_back(full.eigenvalues[i]);
      out.lowrank.push_back(full.lowrank[i]);
    }
    ++k;
  }
  return out;
}

}  // namespace glrl
