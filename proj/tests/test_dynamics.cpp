#include <gtest/gtest.h>

#include <cmath>

#include "glrl/counterexamples.hpp"
#include "glrl/dynamics.hpp"
#include "test_util.hpp"

using namespace glrl;
using glrl::testing::random_matrix;
using glrl::testing::random_psd;

namespace {

IntegratorConfig rk4(double step, std::int64_t record_every = 1) {
  IntegratorConfig c;
  c.scheme = Scheme::RK4;
  c.step = step;
  c.record_every = record_every;
  return c;
}

LossSpec diag_full(const Vector& mu) { return LossSpec::full_observation(SymMat::diagonal(mu)); }

}  // namespace

TEST(IntegratorConfig, Validation) {
  IntegratorConfig c;
  c.step = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = IntegratorConfig{};
  c.scheme = Scheme::AdaptiveGD;
  EXPECT_THROW(c.validate(), Error);
  c.adaptive = AdaptiveParams{};
  EXPECT_NO_THROW(c.validate());
  c.record_every = 0;
  EXPECT_THROW(c.validate(), Error);
  c = IntegratorConfig{};
  c.sample_times = {1.0, 0.5};
  EXPECT_THROW(c.validate(), Error);
}

TEST(IntegratorConfig, PresetsPerDepth) {
  const IntegratorConfig c2 = table1_config(2);
  EXPECT_EQ(c2.scheme, Scheme::Euler);
  EXPECT_DOUBLE_EQ(c2.step, 1e-3);
  const IntegratorConfig c3 = table1_config(3);
  EXPECT_EQ(c3.scheme, Scheme::AdaptiveGD);
  EXPECT_DOUBLE_EQ(c3.step, 2e-5);
  EXPECT_DOUBLE_EQ(c3.adaptive->epsilon, 1e-4);
  EXPECT_DOUBLE_EQ(c3.adaptive->alpha, 0.99);
  const IntegratorConfig c4 = table1_config(4);
  EXPECT_DOUBLE_EQ(c4.step, 3e-4);
  EXPECT_DOUBLE_EQ(c4.adaptive->epsilon, 1e-3);
  EXPECT_EQ(c4.max_steps, 1'000'000);
  EXPECT_THROW(table1_config(5), Error);
}

TEST(SigmaClosedForm, Limits) {
  EXPECT_DOUBLE_EQ(sigma_closed_form(1e-3, 2.0, 0.0), 1e-3);
  EXPECT_NEAR(sigma_closed_form(1e-3, 2.0, 50.0 / 2.0), 2.0, 1e-8);
  EXPECT_DOUBLE_EQ(sigma_closed_form(0.5, 0.0, 1.0), 0.5 / 2.0);
  EXPECT_THROW(sigma_closed_form(0.0, 1.0, 1.0), Error);
}

TEST(SigmaClosedForm, MatchesScalarOde) {
  // d sigma / dt = 2 sigma (mu - sigma) is the diagonal depth-2 flow
  const double alpha = 1e-3, mu = 2.0, T = 3.0, h = 1e-4;
  double s = alpha;
  auto f = [mu](double x) { return 2.0 * x * (mu - x); };
  for (int k = 0; k < static_cast<int>(T / h + 0.5); ++k) {
    const double k1 = f(s), k2 = f(s + 0.5 * h * k1), k3 = f(s + 0.5 * h * k2),
                 k4 = f(s + h * k3);
    s += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(sigma_closed_form(alpha, mu, T), s, 1e-8);
}

TEST(FlowDepth2, FullObservationDiagonalMatchesClosedForm) {
  const Vector mu = Eigen::Vector3d(3.0, 2.0, 0.5);
  const double alpha = 1e-3;
  const Trajectory tr =
      flow_depth2(diag_full(mu), SymMat::identity(3) * alpha, rk4(1e-3, 50), 10.0 / 0.5);
  double err = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k)
    for (int i = 0; i < 3; ++i)
      err = std::max(err, std::abs(tr.states[k](i, i) - sigma_closed_form(alpha, mu(i), tr.times[k])));
  EXPECT_LE(err, 1e-6);
}

TEST(FlowDepth2, LinearLossMatchesClosedForm) {
  Rng rng(1);
  const SymMat Q = glrl::testing::random_sym(4, rng);
  const SymMat W0 = random_psd(4, rng, 0.1);
  const Trajectory tr = flow_depth2(LossSpec::linear(Q, 0.0), W0, rk4(1e-3, 100), 1.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const SymMat ref = linear_flow_closed_form(Q, W0, tr.times[k]);
    EXPECT_LE((tr.states[k] - ref.mat()).norm(), 1e-9 * std::max(1.0, ref.frobenius()));
  }
}

TEST(FlowDepth2, LinearLossAlignsWithTopEigenvector) {
  const Vector mu = Eigen::Vector2d(2.0, 1.0);
  const double alpha = 1e-3;
  IntegratorConfig c = rk4(1e-3, 1000);
  c.overflow_guard = 1e300;
  const Trajectory tr =
      flow_depth2(LossSpec::linear(SymMat::diagonal(mu), 0.0), SymMat::identity(2) * alpha, c, 8.0);
  // e^{-2 mu1 t} W(t) -> (v1^T W0 v1) v1 v1^T
  const Matrix scaled = std::exp(-2.0 * mu(0) * tr.final_time()) * tr.final_state();
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = alpha;
  EXPECT_LE((scaled - expected).norm(), 1e-6 * alpha);
}

TEST(FlowDepth2, StationaryStartStaysPut) {
  const Vector mu = Eigen::Vector3d(3.0, 2.0, 1.0);
  const SymMat W0 = SymMat::outer(Vector::Unit(3, 0)) * 3.0;
  const Trajectory tr = flow_depth2(diag_full(mu), W0, rk4(1e-2, 10), 5.0);
  for (const auto& W : tr.states) EXPECT_LE((W - W0.mat()).norm(), 1e-14);
}

TEST(FlowDepth2, RejectsIndefiniteStart) {
  const Vector mu = Eigen::Vector2d(1.0, 1.0);
  try {
    flow_depth2(diag_full(mu), SymMat::diagonal(Eigen::Vector2d(1.0, -1.0)), rk4(1e-3), 1.0);
    FAIL() << "expected NotPSD";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPSD);
  }
}

TEST(FlowDepth2, GuardStopsBlowUp) {
  const SymMat Q = SymMat::diagonal(Eigen::Vector2d(2.0, 1.0));
  IntegratorConfig c = rk4(1e-3, 1000);
  c.overflow_guard = 1e6;
  const Trajectory tr = flow_depth2(LossSpec::linear(Q, 0.0), SymMat::identity(2), c, 100.0);
  EXPECT_EQ(tr.termination, Termination::Diverged);
  EXPECT_LT(tr.final_time(), 100.0);
  EXPECT_TRUE(tr.final_state().allFinite());
}

TEST(Integrator, RecordCountAndTimes) {
  const Vector mu = Eigen::Vector2d(1.0, 0.5);
  for (std::int64_t every : {1, 7, 10, 33}) {
    IntegratorConfig c = rk4(0.01, every);
    c.max_steps = 100;
    const Trajectory tr = flow_depth2(diag_full(mu), SymMat::identity(2) * 0.1, c, 1e9);
    EXPECT_EQ(tr.termination, Termination::MaxSteps);
    EXPECT_EQ(tr.steps, 100);
    EXPECT_EQ(static_cast<std::int64_t>(tr.size()), (100 + every - 1) / every + 1);
    for (std::size_t k = 1; k < tr.size(); ++k) EXPECT_GT(tr.times[k], tr.times[k - 1]);
    EXPECT_EQ(tr.loss.size(), tr.size());
    EXPECT_EQ(tr.eigenvalues.size(), tr.size());
  }
}

TEST(Integrator, HorizonIsHitExactly) {
  const Trajectory tr =
      flow_depth2(diag_full(Eigen::Vector2d(1.0, 0.5)), SymMat::identity(2) * 0.1, rk4(0.3), 1.0);
  EXPECT_EQ(tr.final_time(), 1.0);
  EXPECT_EQ(tr.termination, Termination::Horizon);
}

TEST(Integrator, SampleTimesAreLanded) {
  IntegratorConfig c = rk4(0.07);
  c.sample_times = {0.1, 0.25, 0.8};
  const Trajectory tr =
      flow_depth2(diag_full(Eigen::Vector2d(1.0, 0.5)), SymMat::identity(2) * 0.1, c, 1.0);
  ASSERT_EQ(tr.size(), 5u);
  EXPECT_EQ(tr.times[1], 0.1);
  EXPECT_EQ(tr.times[2], 0.25);
  EXPECT_EQ(tr.times[3], 0.8);
  EXPECT_EQ(tr.times[4], 1.0);
}

TEST(Integrator, StationaryStop) {
  IntegratorConfig c = rk4(0.01, 1000);
  c.stop_grad_norm = 1e-8;
  const Trajectory tr = flow_depth2(diag_full(Eigen::Vector2d(1.0, 0.5)),
                                    SymMat::identity(2) * 0.1, c, 1e9);
  EXPECT_EQ(tr.termination, Termination::Stationary);
  EXPECT_LE(tr.grad_norm.back(), 1e-8);
}

TEST(Integrator, TinyStatesAreNotMistakenForStationary) {
  const Trajectory tr = flow_depth2(diag_full(Eigen::Vector2d(1.0, 0.5)),
                                    SymMat::identity(2) * 1e-200, rk4(0.01, 1000), 1.0);
  EXPECT_EQ(tr.termination, Termination::Horizon);
  EXPECT_GT(tr.final_state()(0, 0), 1e-200);
}

TEST(GdFactored, ZeroGradientIsConstant) {
  const SymMat target = SymMat::outer(Eigen::Vector3d(1.0, 2.0, 0.5));
  const Matrix U0 = Eigen::Vector3d(1.0, 2.0, 0.5);
  const Trajectory tr = gd_factored(LossSpec::full_observation(target), U0, rk4(0.01, 10), 1.0);
  for (const auto& W : tr.states) EXPECT_LE((W - target.mat()).norm(), 1e-14);
}

TEST(GdFactored, MatchesEndToEndFlow) {
  Rng rng(2);
  const LossSpec loss = glrl::testing::random_sensing(4, 8, rng);
  const Matrix U0 = 0.3 * random_matrix(4, 4, rng);
  const SymMat W0(Matrix(U0 * U0.transpose()));
  IntegratorConfig e;
  e.scheme = Scheme::Euler;
  e.step = 1e-4;
  e.record_every = 1000;
  const Trajectory gd = gd_factored(loss, U0, e, 5.0);
  const Trajectory fl = flow_depth2(loss, W0, rk4(1e-3, 100), 5.0);
  ASSERT_EQ(gd.size(), fl.size());
  double err = 0.0;
  for (std::size_t k = 0; k < gd.size(); ++k)
    err = std::max(err, (gd.states[k] - fl.states[k]).norm());
  EXPECT_LE(err, 1e-3);
  ASSERT_EQ(gd.factors.size(), 1u);
  EXPECT_LE((gd.factors[0] * gd.factors[0].transpose() - gd.final_state()).norm(), 1e-12);
}

TEST(GdFactored, CounterexampleRankOneStartReachesLowRankCompletion) {
  // the valley mode near M_rank slows like 1 / R^2, so a small R keeps the run short
  const Counterexample4x4 ce = build_4x4(10.0);
  const Vector u = top_eigpair(-ce.loss.gradient(SymMat::zero(4))).vector;
  const Matrix U0 = std::sqrt(1e-7) * u;
  IntegratorConfig c;
  c.scheme = Scheme::Euler;
  c.step = 2e-3;
  c.record_every = 10'000'000;
  c.diagnostics = false;
  const Trajectory tr = gd_factored(ce.loss, U0, c, 2000.0);
  EXPECT_LE((tr.final_state() - ce.M_rank.mat()).norm(), 1e-6);
}

TEST(BalancedInit, DepthTwoScaledIdentity) {
  Rng rng(3);
  const int d = 4;
  const double scale = 0.7;
  const DeepFactorState st = balanced_init(Vector::Constant(d, scale / std::sqrt(d)), 2, rng);
  const Matrix W = st.product();
  EXPECT_NEAR(W.norm(), scale, 1e-12);
  EXPECT_LE((W - W.transpose()).norm(), 1e-12);
  EXPECT_LE((st.factors[1] - st.factors[0].transpose()).norm(), 1e-12);
}

TEST(BalancedInit, BalancedSymmetricPsd) {
  Rng rng(4);
  for (int L : {2, 3, 4, 5}) {
    const DeepFactorState st = balanced_init(5, L, 0.5, rng);
    EXPECT_EQ(static_cast<int>(st.factors.size()), L);
    EXPECT_LE(st.imbalance(), 1e-12);
    const Matrix W = st.product();
    EXPECT_LE((W - W.transpose()).norm(), 1e-12);
    EXPECT_GE(lambda_min(SymMat(W)), -1e-12);
    EXPECT_NEAR(W.norm(), 0.5, 1e-12);
  }
}

TEST(BalancedInit, FromPsd) {
  Rng rng(5);
  const SymMat W0 = random_psd(4, rng);
  const DeepFactorState st = balanced_from_psd(W0, 3);
  EXPECT_LE((st.product() - W0.mat()).norm(), 1e-10 * W0.frobenius());
  EXPECT_LE(st.imbalance(), 1e-10);
}

TEST(FlowDeep, DiagonalMatchesClosedForm) {
  const Vector mu = Eigen::Vector3d(2.0, 0.9, -0.5);
  const Vector m0 = Eigen::Vector3d(0.05, 0.2, 0.1);
  const LossSpec loss = LossSpec::linear(SymMat::diagonal(mu), 0.0);
  for (int L : {3, 4, 6}) {
    const double P = L / 2.0;
    const double blow = deep_diag_blowup_times(m0, mu, P).minCoeff();
    const SymMat W0 = SymMat::diagonal(m0.array().pow(P).matrix());
    const double T = 0.9 * blow;
    const Trajectory tr = flow_deep(loss, W0, L, rk4(1e-4, 100), T);
    double err = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const Vector m = deep_diag_closed_form(m0, mu, P, tr.times[k]);
      const Vector w = m.array().pow(P).matrix();
      err = std::max(err, (tr.states[k].diagonal() - w).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(err, 1e-6) << "L = " << L;
  }
}

TEST(FlowDeep, RejectsDepthTwo) {
  EXPECT_THROW(flow_deep(diag_full(Eigen::Vector2d(1.0, 1.0)), SymMat::identity(2), 2, rk4(1e-3), 1.0),
               Error);
}

TEST(FlowDeep, DiagonalityPreserved) {
  const Vector mu = Eigen::Vector4d(2.0, 0.9, 0.8, 0.7);
  const LossSpec loss = LossSpec::linear(SymMat::diagonal(mu), 0.0);
  const SymMat W0 = SymMat::diagonal(Eigen::Vector4d(1e-4, 16e-4, 1.1e-4, 0.9e-4));
  const Trajectory tr = flow_deep(loss, W0, 4, rk4(1e-2, 10), 10.0);
  for (const auto& W : tr.states) {
    Matrix off = W;
    off.diagonal().setZero();
    EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(DeepDiagClosedForm, Basics) {
  const Vector m0 = Eigen::Vector3d(0.0, 0.5, 1.0);
  const Vector mu = Eigen::Vector3d(1.0, 1.0, -1.0);
  EXPECT_TRUE(deep_diag_closed_form(m0, mu, 2.0, 0.0).isApprox(m0));
  EXPECT_EQ(deep_diag_closed_form(m0, mu, 2.0, 0.9)(0), 0.0);
  const Vector blow = deep_diag_blowup_times(m0, mu, 2.0);
  EXPECT_TRUE(std::isinf(blow(0)));
  EXPECT_DOUBLE_EQ(blow(1), 1.0);
  EXPECT_TRUE(std::isinf(blow(2)));
  try {
    deep_diag_closed_form(m0, mu, 2.0, 1.0);
    FAIL() << "expected BlowUp";
  } catch (const BlowUpError& e) {
    EXPECT_EQ(e.index(), 1);
    EXPECT_DOUBLE_EQ(e.time(), 1.0);
    EXPECT_EQ(e.code(), ErrorCode::BlowUp);
  }
}

TEST(GdDeepFactored, ZeroGradientIsConstant) {
  const SymMat target = SymMat::diagonal(Eigen::Vector2d(1.0, 0.25));
  const DeepFactorState st = balanced_from_psd(target, 3);
  IntegratorConfig c = table1_config(3);
  c.max_steps = 50;
  const Trajectory tr = gd_deep_factored(LossSpec::full_observation(target), st, c, 1e9);
  for (const auto& W : tr.states) EXPECT_LE((W - target.mat()).norm(), 1e-14);
}

TEST(GdDeepFactored, FirstAdaptiveStep) {
  // with v0 = 0 the bias-corrected first step is eta / (||grad|| + eps)
  const SymMat target = SymMat::diagonal(Eigen::Vector2d(1.0, 0.5));
  const LossSpec loss = LossSpec::full_observation(target);
  const DeepFactorState st = balanced_from_psd(SymMat::identity(2) * 0.1, 3);
  IntegratorConfig c = table1_config(3);
  c.step = 1e-2;
  c.max_steps = 1;
  const Trajectory tr = gd_deep_factored(loss, st, c, 1e9);
  ASSERT_EQ(tr.size(), 2u);
  const double g0 = tr.grad_norm[0];
  EXPECT_NEAR(tr.times[1], 1e-2 / (g0 + 1e-4), 1e-15);
  // the update itself: U_i <- U_i - h grad_i
  const Matrix W0 = st.product();
  const Matrix G = loss.gradient(SymMat(W0)).mat();
  const double h = tr.times[1];
  std::vector<Matrix> u = st.factors;
  std::vector<Matrix> next = u;
  next[0] = u[0] - h * G * (u[1] * u[2]).transpose();
  next[1] = u[1] - h * u[0].transpose() * G * u[2].transpose();
  next[2] = u[2] - h * (u[0] * u[1]).transpose() * G;
  EXPECT_LE((tr.states[1] - next[0] * next[1] * next[2]).norm(), 1e-14);
}

TEST(GdDeepFactored, MatchesEndToEndFlowFromBalancedStart) {
  Rng rng(6);
  const LossSpec loss = glrl::testing::random_sensing(3, 6, rng);
  const DeepFactorState st = balanced_init(3, 4, 0.5, rng);
  const Trajectory gd = gd_deep_factored(loss, st, rk4(1e-3, 100), 2.0);
  const Trajectory fl = flow_deep(loss, SymMat(st.product()), 4, rk4(1e-3, 100), 2.0);
  ASSERT_EQ(gd.size(), fl.size());
  for (std::size_t k = 0; k < gd.size(); ++k)
    EXPECT_LE((gd.states[k] - fl.states[k]).norm(), 1e-8);
  EXPECT_TRUE(gd.warnings.empty());
}

TEST(GdDeepFactored, FlagsBalanceDrift) {
  Rng rng(7);
  const LossSpec loss = glrl::testing::random_sensing(3, 6, rng);
  DeepFactorState st = balanced_init(3, 3, 0.5, rng);
  st.factors[0] *= 2.0;
  st.factors[1] *= 0.5;
  st.balanced_tol = 1e-12;
  const Trajectory tr = gd_deep_factored(loss, st, rk4(1e-3, 100), 1.0);
  ASSERT_FALSE(tr.warnings.empty());
  EXPECT_EQ(tr.warnings.front(), "BalanceDrift");
}

TEST(AppendState, Diagnostics) {
  Trajectory tr;
  append_state(tr, 0.0, Matrix(SymMat::diagonal(Eigen::Vector3d(1.0, 3.0, 2.0)).mat()), 0.5, 1.0);
  ASSERT_EQ(tr.eigenvalues.size(), 1u);
  EXPECT_TRUE(tr.eigenvalues[0].isApprox(Eigen::Vector3d(3.0, 2.0, 1.0)));
  EXPECT_NEAR(tr.lowrank[0](0), std::sqrt(14.0), 1e-12);
  EXPECT_NEAR(tr.lowrank[0](1), std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(tr.lowrank[0](2), 1.0, 1e-12);
}

TEST(RandomOrthogonal, IsOrthogonalAndSeeded) {
  Rng a(8), b(8);
  const Matrix Q = random_orthogonal(6, a);
  EXPECT_LE((Q.transpose() * Q - Matrix::Identity(6, 6)).norm(), 1e-12);
  EXPECT_TRUE((Q.array() == random_orthogonal(6, b).array()).all());
}
