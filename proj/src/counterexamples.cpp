#include "glrl/counterexamples.hpp"

#include <cmath>

#include "glrl/analysis.hpp"
#include "integrator.hpp"

namespace glrl {

Counterexample4x4 build_4x4(double R) {
  require(R > 1.0, ErrorCode::InvalidInput, "build_4x4 needs R > 1");
  Counterexample4x4 ce;
  ce.R = R;
  const Vector z = (Vector(4) << 1.0, R, 1.0, R).finished();
  ce.M_rank = SymMat::outer(z);
  Matrix n(4, 4);
  n << R, 1, 1, R,
       1, R, R, 1,
       1, R, R, 1,
       R, 1, 1, R;
  ce.M_norm = SymMat(n);
  ce.loss = build_counterexample_loss(R);

  // both completions must fit the observations exactly
  require(ce.loss.value(ce.M_rank) == 0.0 && ce.loss.value(ce.M_norm) == 0.0,
          ErrorCode::InvalidInput, "counterexample matrices are not feasible");
  return ce;
}

RefutationReport verify_gf_refutes_conjecture(const Counterexample4x4& ce,
                                              const std::vector<double>& init_scales,
                                              const IntegratorConfig& cfg, double horizon) {
  require(!init_scales.empty(), ErrorCode::InvalidInput, "no initialization scales");
  RefutationReport rep;
  std::size_t smallest = 0;
  for (std::size_t k = 0; k < init_scales.size(); ++k) {
    const double s = init_scales[k];
    require(s > 0.0, ErrorCode::InvalidInput, "scales must be positive");
    if (s < init_scales[smallest]) smallest = k;
    IntegratorConfig c = cfg;
    c.diagnostics = false;
    const Trajectory tr = flow_depth2(ce.loss, SymMat::identity(4) * s, c, horizon);
    if (tr.termination == Termination::Diverged)
      throw Error(ErrorCode::Diverged, "flow diverged at scale " + std::to_string(s));
    const SymMat W(tr.final_state());
    RefutationRow row;
    row.scale = s;
    row.dist_to_rank = (W - ce.M_rank).frobenius();
    row.dist_to_norm = (W - ce.M_norm).frobenius();
    row.nuclear = nuclear_norm(W);
    row.final_time = tr.final_time();
    row.steps = tr.steps;
    row.termination = tr.termination;
    rep.rows.push_back(row);
  }
  const RefutationRow& r = rep.rows[smallest];
  rep.pass = r.dist_to_rank < r.dist_to_norm && r.nuclear >= 10.0 * 4.0 * ce.R;
  return rep;
}

double xy_energy(double R, double x, double y) {
  const double a = x * x - 1.0;
  const double b = x * y - R;
  return 0.5 * a * a + b * b;
}

Eigen::Vector2d xy_rate(double R, double x, double y) {
  const double b = x * y - R;
  return {(1.0 - x * x) * x - y * b, -x * b};
}

XyTrajectory xy_oracle(double R, double eps, double horizon, const IntegratorConfig& cfg) {
  require(eps > 0.0, ErrorCode::InvalidInput, "eps must be positive");
  require(R > 1.0, ErrorCode::InvalidInput, "R must exceed 1");
  Matrix A(2, 2);
  A << 1.0, R, R, 0.0;
  const Vector v1 = top_eigpair(SymMat(A)).vector;

  XyTrajectory out;
  auto lift = [](const Eigen::Vector2d& p) {
    const Eigen::Vector4d w(p(0), p(1), p(0), p(1));
    return Matrix(w * w.transpose());
  };
  // the recorder sees each recorded state through to_w exactly once
  auto to_w = [&](const Eigen::Vector2d& p) {
    out.x.push_back(p(0));
    out.y.push_back(p(1));
    out.energy.push_back(xy_energy(R, p(0), p(1)));
    return lift(p);
  };
  auto rate = [R](const Eigen::Vector2d& p, Eigen::Vector2d& o) { o = xy_rate(R, p(0), p(1)); };
  const LossSpec loss = build_counterexample_loss(R);
  auto lossf = [&](const Matrix& w) { return loss.value(w); };
  auto norm = [](const Eigen::Vector2d& p) { return p.squaredNorm() * 2.0; };

  IntegratorConfig c = cfg;
  c.record_min_dist = 0.0;
  Eigen::Vector2d p = std::sqrt(eps) * Eigen::Vector2d(v1(0), v1(1));
  out.lifted = detail::integrate(p, rate, to_w, lossf, norm, c, horizon);
  return out;
}

DeepEscapeInstance build_deep_escape(double alpha, Rng& rng) {
  require(alpha > 0.0, ErrorCode::InvalidInput, "alpha must be positive");
  DeepEscapeInstance inst;
  inst.alpha = alpha;
  inst.L = 4;
  Vector q(10);
  q(0) = 2.0;
  for (int i = 1; i < 10; ++i) q(i) = 1.0 - 0.1 * i;
  inst.neg_grad0 = SymMat::diagonal(q);
  std::uniform_real_distribution<double> u(0.9, 1.1);
  Vector w(10);
  for (int i = 0; i < 10; ++i) w(i) = u(rng) * alpha;
  w(1) = 16.0 * alpha;
  inst.W0 = SymMat::diagonal(w);
  inst.loss = LossSpec::linear(inst.neg_grad0, 0.0);
  return inst;
}

DeepEscapeReport deep_escape_demo(const DeepEscapeInstance& inst,
                                  const std::vector<double>& noise_eps,
                                  const std::vector<std::uint64_t>& seeds,
                                  const IntegratorConfig& cfg, double horizon) {
  DeepEscapeReport rep;
  const double P = inst.L / 2.0;
  const Vector m0 = inst.W0.mat().diagonal().array().pow(2.0 / inst.L);
  const Vector mu = inst.neg_grad0.mat().diagonal();
  rep.blowup_times = deep_diag_blowup_times(m0, mu, P);
  Eigen::Index first = 0;
  rep.blowup_times.minCoeff(&first);
  rep.first_index = static_cast<int>(first);
  bool strict = true;
  for (Eigen::Index i = 0; i < rep.blowup_times.size(); ++i)
    if (i != first && !(rep.blowup_times(i) > rep.blowup_times(first))) strict = false;
  rep.second_first = first == 1 && strict;

  const int d = inst.W0.dim();
  const Vector e1 = Vector::Unit(d, 0);
  for (double eps : noise_eps) {
    for (std::uint64_t seed : seeds) {
      Rng rng(seed);
      std::normal_distribution<double> nd(0.0, 1.0);
      Matrix Z(d, d);
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) Z(i, j) = nd(rng);
      const SymMat W0(Matrix(inst.W0.mat() + 0.5 * inst.alpha * eps * (Z + Z.transpose())));
      NoisyEscapeRun run;
      run.noise = eps;
      run.seed = seed;
      run.trajectory = flow_deep(inst.loss, W0, inst.L, cfg, horizon);
      run.termination = run.trajectory.termination;
      Trajectory last;
      last.states.push_back(run.trajectory.final_state());
      run.final_alignment = alignment(last, e1).front();
      run.final_misalignment = misalignment(last, e1).front();
      run.final_growth = run.trajectory.final_state().norm() / W0.frobenius();
      rep.runs.push_back(std::move(run));
    }
  }
  return rep;
}

Rank1EscapeReport rank1_escape_invariance(int L, const SymMat& Q, const Vector& u0,
                                          const IntegratorConfig& cfg, double horizon) {
  require(u0.size() == Q.dim(), ErrorCode::InvalidInput, "u0 dim mismatch");
  require(u0.norm() > 0.0, ErrorCode::InvalidInput, "u0 must be nonzero");
  const Vector v1 = top_eigpair(Q).vector;
  if (std::abs(v1.dot(u0)) <= 1e-14 * u0.norm())
    throw Error(ErrorCode::NoAlignment, "u0 is orthogonal to the top eigenvector");
  const LossSpec loss = LossSpec::linear(Q, 0.0);
  Rank1EscapeReport rep;
  rep.trajectory = flow_deep_from_m(loss, SymMat::outer(u0), L, cfg, horizon);
  rep.termination = rep.trajectory.termination;
  Trajectory last;
  last.states.push_back(rep.trajectory.final_state());
  rep.final_alignment = alignment(last, v1).front();
  rep.final_misalignment = misalignment(last, v1).front();
  return rep;
}

}  // namespace glrl
