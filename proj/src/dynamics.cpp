#include "glrl/dynamics.hpp"

#include <cmath>

#include "integrator.hpp"

namespace glrl {

void IntegratorConfig::validate() const {
  require(step > 0.0 && std::isfinite(step), ErrorCode::InvalidInput, "step must be positive");
  require(scheme != Scheme::AdaptiveGD || adaptive.has_value(), ErrorCode::InvalidInput,
          "AdaptiveGD needs adaptive parameters");
  if (adaptive) {
    require(adaptive->alpha > 0.0 && adaptive->alpha < 1.0, ErrorCode::InvalidInput,
            "adaptive alpha must lie in (0,1)");
    require(adaptive->epsilon > 0.0, ErrorCode::InvalidInput, "adaptive epsilon must be positive");
  }
  require(max_steps >= 0, ErrorCode::InvalidInput, "max_steps must be nonnegative");
  require(stop_grad_norm >= 0.0, ErrorCode::InvalidInput, "stop_grad_norm must be nonnegative");
  require(record_every >= 1, ErrorCode::InvalidInput, "record_every must be >= 1");
  require(overflow_guard > 0.0, ErrorCode::InvalidInput, "overflow_guard must be positive");
  for (std::size_t i = 1; i < sample_times.size(); ++i)
    require(sample_times[i] > sample_times[i - 1], ErrorCode::InvalidInput,
            "sample_times must be increasing");
}

IntegratorConfig table1_config(int depth) {
  IntegratorConfig c;
  c.max_steps = 1'000'000;
  switch (depth) {
    case 2:
      c.scheme = Scheme::Euler;
      c.step = 1e-3;
      break;
    case 3:
      c.scheme = Scheme::AdaptiveGD;
      c.step = 2e-5;
      c.adaptive = AdaptiveParams{0.99, 1e-4};
      break;
    case 4:
      c.scheme = Scheme::AdaptiveGD;
      c.step = 3e-4;
      c.adaptive = AdaptiveParams{0.99, 1e-3};
      break;
    default:
      throw Error(ErrorCode::InvalidInput, "no preset for depth " + std::to_string(depth));
  }
  return c;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Horizon: return "horizon";
    case Termination::Stationary: return "stationary";
    case Termination::MaxSteps: return "max_steps";
    case Termination::Diverged: return "diverged";
  }
  return "unknown";
}

namespace detail {

void record_diagnostics(Trajectory& tr, const Matrix& W) {
  const Eigen::Index d = W.rows();
  Matrix S = 0.5 * (W + W.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  Vector lam = es.eigenvalues().reverse();
  Vector sv;
  if ((W - W.transpose()).norm() <= 1e-12 * std::max(1.0, W.norm())) {
    sv = lam.cwiseAbs();
    std::sort(sv.data(), sv.data() + d, std::greater<>());
  } else {
    sv = Eigen::JacobiSVD<Matrix>(W).singularValues();
  }
  Vector low(d);
  double tail = 0.0;
  for (Eigen::Index r = d - 1; r >= 0; --r) {
    tail += sv(r) * sv(r);
    low(r) = std::sqrt(tail);
  }
  tr.eigenvalues.push_back(std::move(lam));
  tr.lowrank.push_back(std::move(low));
}

}  // namespace detail

void append_state(Trajectory& tr, double t, const Matrix& W, double loss, double grad_norm,
                  bool diagnostics) {
  require(tr.times.empty() || t > tr.times.back(), ErrorCode::InvalidInput,
          "trajectory times must increase");
  tr.times.push_back(t);
  tr.loss.push_back(loss);
  tr.grad_norm.push_back(grad_norm);
  if (diagnostics) detail::record_diagnostics(tr, W);
  tr.states.push_back(W);
}

Matrix DeepFactorState::product() const {
  require(!factors.empty(), ErrorCode::InvalidInput, "empty factor list");
  Matrix W = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) W = W * factors[i];
  return W;
}

double DeepFactorState::imbalance() const {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < factors.size(); ++i) {
    const Matrix& a = factors[i];
    const Matrix& b = factors[i + 1];
    worst = std::max(worst, (a.transpose() * a - b * b.transpose()).norm());
  }
  return worst;
}

Matrix random_orthogonal(int d, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = nd(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix Q = qr.householderQ();
  const Matrix& R = qr.matrixQR();
  for (int j = 0; j < d; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

DeepFactorState balanced_init(const Vector& diag, int L, Rng& rng) {
  require(L >= 1, ErrorCode::InvalidInput, "depth must be >= 1");
  require((diag.array() >= 0.0).all(), ErrorCode::InvalidInput, "diagonal must be nonnegative");
  const int d = static_cast<int>(diag.size());
  std::vector<Matrix> V;
  for (int i = 0; i < L; ++i) V.push_back(random_orthogonal(d, rng));
  const Vector root = diag.array().pow(1.0 / L);
  DeepFactorState s;
  s.depth = L;
  for (int i = 0; i < L; ++i) {
    const Matrix& next = V[(i + 1) % L];
    s.factors.push_back(V[i] * root.asDiagonal() * next.transpose());
  }
  return s;
}

DeepFactorState balanced_init(int d, int L, double scale, Rng& rng) {
  require(d >= 1, ErrorCode::InvalidInput, "dim must be >= 1");
  require(scale > 0.0, ErrorCode::InvalidInput, "scale must be positive");
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector diag(d);
  for (int i = 0; i < d; ++i) diag(i) = std::abs(nd(rng));
  diag *= scale / diag.norm();
  return balanced_init(diag, L, rng);
}

DeepFactorState balanced_from_psd(const SymMat& W0, int L, const SymTolerances& tol) {
  require(L >= 1, ErrorCode::InvalidInput, "depth must be >= 1");
  DeepFactorState s;
  s.depth = L;
  const Matrix root = frac_power(W0, 1.0 / L, tol).mat();
  s.factors.assign(L, root);
  return s;
}

namespace {

void check_psd(const SymMat& W0, const SymTolerances& tol) {
  const EigDecomp e = eig(W0);
  const double norm2 = e.values.cwiseAbs().maxCoeff();
  if (e.values.minCoeff() < -tol.psd * norm2)
    throw Error(ErrorCode::NotPSD, "initial state is not PSD");
}

template <class Mat>
Trajectory depth2_impl(const LossSpec& spec, const Mat& W0, const IntegratorConfig& cfg,
                       double horizon) {
  Mat G = W0, WG = W0;
  auto rate = [&](const Mat& W, Mat& out) {
    spec.gradient_into(W, G);
    WG.noalias() = W * G;
    out = -(WG + WG.transpose());
  };
  auto to_w = [](const Mat& W) { return Matrix(W); };
  auto loss = [&](const Matrix& W) { return spec.value(W); };
  auto norm = [](const Mat& W) { return W.norm(); };
  Mat W = W0;
  return detail::integrate(W, rate, to_w, loss, norm, cfg, horizon);
}

}  // namespace

Matrix depth2_rate(const LossSpec& spec, const Matrix& W) {
  Matrix G;
  spec.gradient_into(W, G);
  Matrix WG = W * G;
  return -(WG + WG.transpose());
}

Trajectory flow_depth2(const LossSpec& spec, const SymMat& W0, const IntegratorConfig& cfg,
                       double horizon) {
  require(W0.dim() == spec.dim(), ErrorCode::InvalidInput, "flow_depth2: dim mismatch");
  check_psd(W0, cfg.tol);
  // small fixed sizes avoid heap traffic in the hot loop
  if (W0.dim() == 4) return depth2_impl<Eigen::Matrix4d>(spec, W0.mat(), cfg, horizon);
  return depth2_impl<Matrix>(spec, W0.mat(), cfg, horizon);
}

Trajectory gd_factored(const LossSpec& spec, const Matrix& U0, const IntegratorConfig& cfg,
                       double horizon) {
  require(U0.rows() == spec.dim(), ErrorCode::InvalidInput, "gd_factored: dim mismatch");
  require(U0.cols() >= 1, ErrorCode::InvalidInput, "gd_factored: U0 needs a column");
  const int d = spec.dim();
  Matrix W(d, d), G(d, d);
  auto rate = [&](const Matrix& U, Matrix& out) {
    W.noalias() = U * U.transpose();
    spec.gradient_into(W, G);
    out.noalias() = -G * U;
  };
  auto to_w = [](const Matrix& U) { return Matrix(U * U.transpose()); };
  auto loss = [&](const Matrix& w) { return spec.value(w); };
  auto norm = [](const Matrix& U) { return (U.transpose() * U).norm(); };  // = ||U U^T||_F
  Matrix U = U0;
  Trajectory tr = detail::integrate(U, rate, to_w, loss, norm, cfg, horizon);
  tr.factors = {U};
  return tr;
}

Trajectory flow_deep(const LossSpec& spec, const SymMat& W0, int L, const IntegratorConfig& cfg,
                     double horizon) {
  require(L >= 3, ErrorCode::InvalidInput, "flow_deep needs L >= 3; use flow_depth2 for L = 2");
  require(W0.dim() == spec.dim(), ErrorCode::InvalidInput, "flow_deep: dim mismatch");
  check_psd(W0, cfg.tol);
  return flow_deep_from_m(spec, frac_power(W0, 2.0 / L, cfg.tol), L, cfg, horizon);
}

Trajectory flow_deep_from_m(const LossSpec& spec, const SymMat& M0, int L,
                            const IntegratorConfig& cfg, double horizon) {
  require(L >= 3, ErrorCode::InvalidInput, "flow_deep needs L >= 3; use flow_depth2 for L = 2");
  require(M0.dim() == spec.dim(), ErrorCode::InvalidInput, "flow_deep: dim mismatch");
  check_psd(M0, cfg.tol);
  const int d = spec.dim();
  const bool even = L % 2 == 0;
  const int P = L / 2;
  auto power = [&, even, P](const Matrix& M) -> Matrix {
    if (even) {
      Matrix W = M;
      for (int k = 1; k < P; ++k) W = W * M;
      return 0.5 * (W + W.transpose());
    }
    return frac_power(SymMat(M), 0.5 * L, cfg.tol).mat();
  };
  Matrix G(d, d), GW(d, d);
  auto rate = [&](const Matrix& M, Matrix& out) {
    const Matrix W = power(M);
    spec.gradient_into(W, G);
    GW.noalias() = G * W;
    out = -(GW + GW.transpose());
  };
  auto loss = [&](const Matrix& w) { return spec.value(w); };
  auto norm = [&](const Matrix& M) { return power(M).norm(); };
  Matrix M = M0.mat();
  return detail::integrate(M, rate, power, loss, norm, cfg, horizon);
}

namespace {

struct FactorLayout {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  std::vector<Eigen::Index> offsets;
  Eigen::Index total = 0;

  explicit FactorLayout(const std::vector<Matrix>& fs) {
    for (const auto& f : fs) {
      shapes.emplace_back(f.rows(), f.cols());
      offsets.push_back(total);
      total += f.size();
    }
  }
  Vector pack(const std::vector<Matrix>& fs) const {
    Vector x(total);
    for (std::size_t i = 0; i < fs.size(); ++i)
      x.segment(offsets[i], fs[i].size()) = Eigen::Map<const Vector>(fs[i].data(), fs[i].size());
    return x;
  }
  Eigen::Map<const Matrix> view(const Vector& x, std::size_t i) const {
    return {x.data() + offsets[i], shapes[i].first, shapes[i].second};
  }
  Eigen::Map<Matrix> view(Vector& x, std::size_t i) const {
    return {x.data() + offsets[i], shapes[i].first, shapes[i].second};
  }
  std::vector<Matrix> unpack(const Vector& x) const {
    std::vector<Matrix> fs;
    for (std::size_t i = 0; i < shapes.size(); ++i) fs.emplace_back(view(x, i));
    return fs;
  }
};

}  // namespace

Trajectory gd_deep_factored(const LossSpec& spec, const DeepFactorState& state,
                            const IntegratorConfig& cfg, double horizon) {
  const std::size_t L = state.factors.size();
  require(L >= 1 && static_cast<int>(L) == state.depth, ErrorCode::InvalidInput,
          "gd_deep_factored: depth does not match factor count");
  require(state.factors.front().rows() == spec.dim() &&
              state.factors.back().cols() == spec.dim(),
          ErrorCode::InvalidInput, "gd_deep_factored: dim mismatch");
  for (std::size_t i = 0; i + 1 < L; ++i)
    require(state.factors[i].cols() == state.factors[i + 1].rows(), ErrorCode::InvalidInput,
            "gd_deep_factored: inner dimensions do not conform");

  const FactorLayout layout(state.factors);
  const int d = spec.dim();
  std::vector<Matrix> prefix(L), suffix(L);
  Matrix G(d, d);
  auto rate = [&](const Vector& x, Vector& out) {
    // prefix[i] = U_1..U_i, suffix[i] = U_i..U_L
    prefix[0] = layout.view(x, 0);
    for (std::size_t i = 1; i < L; ++i) prefix[i] = prefix[i - 1] * layout.view(x, i);
    suffix[L - 1] = layout.view(x, L - 1);
    for (std::size_t i = L - 1; i-- > 0;) suffix[i] = layout.view(x, i) * suffix[i + 1];
    spec.gradient_into(prefix[L - 1], G);
    for (std::size_t i = 0; i < L; ++i) {
      Matrix g = G;
      if (i > 0) g = prefix[i - 1].transpose() * g;
      if (i + 1 < L) g = g * suffix[i + 1].transpose();
      layout.view(out, i) = -g;
    }
  };
  auto to_w = [&](const Vector& x) {
    Matrix W = layout.view(x, 0);
    for (std::size_t i = 1; i < L; ++i) W = W * layout.view(x, i);
    return W;
  };
  auto loss = [&](const Matrix& w) { return spec.value(w); };
  auto norm = [&](const Vector& x) { return to_w(x).norm(); };

  Vector x = layout.pack(state.factors);
  Trajectory tr = detail::integrate(x, rate, to_w, loss, norm, cfg, horizon);
  DeepFactorState end{state.depth, layout.unpack(x), state.balanced_tol};
  if (end.imbalance() > 100.0 * state.balanced_tol) tr.warnings.push_back("BalanceDrift");
  tr.factors = std::move(end.factors);
  return tr;
}

double sigma_closed_form(double alpha, double mu, double t) {
  require(alpha > 0.0, ErrorCode::InvalidInput, "sigma_closed_form needs alpha > 0");
  if (mu == 0.0) return alpha / (1.0 + 2.0 * alpha * t);
  return alpha * mu / (alpha + (mu - alpha) * std::exp(-2.0 * mu * t));
}

Vector deep_diag_blowup_times(const Vector& m0, const Vector& mu, double P) {
  require(m0.size() == mu.size(), ErrorCode::InvalidInput, "m0/mu size mismatch");
  require(P > 1.0, ErrorCode::InvalidInput, "P must exceed 1");
  Vector times(m0.size());
  for (Eigen::Index i = 0; i < m0.size(); ++i) {
    require(m0(i) >= 0.0, ErrorCode::InvalidInput, "m0 must be nonnegative");
    if (m0(i) == 0.0 || mu(i) <= 0.0) {
      times(i) = std::numeric_limits<double>::infinity();
    } else {
      times(i) = std::pow(m0(i), -(P - 1.0)) / (2.0 * mu(i) * (P - 1.0));
    }
  }
  return times;
}

Vector deep_diag_closed_form(const Vector& m0, const Vector& mu, double P, double t) {
  const Vector blow = deep_diag_blowup_times(m0, mu, P);
  Eigen::Index first = -1;
  for (Eigen::Index i = 0; i < blow.size(); ++i)
    if (t >= blow(i) && (first < 0 || blow(i) < blow(first))) first = i;
  if (first >= 0) throw BlowUpError(static_cast<int>(first), blow(first));
  Vector m(m0.size());
  for (Eigen::Index i = 0; i < m0.size(); ++i) {
    if (m0(i) == 0.0) {
      m(i) = 0.0;
      continue;
    }
    const double base = std::pow(m0(i), -(P - 1.0)) - 2.0 * mu(i) * (P - 1.0) * t;
    m(i) = std::pow(base, -1.0 / (P - 1.0));
  }
  return m;
}

SymMat linear_flow_closed_form(const SymMat& Q, const SymMat& W0, double t) {
  require(Q.dim() == W0.dim(), ErrorCode::InvalidInput, "dim mismatch");
  const EigDecomp e = eig(Q);
  const Vector ex = (t * e.values).array().exp();
  const Matrix E = e.vectors * ex.asDiagonal() * e.vectors.transpose();
  return SymMat(Matrix(E * W0.mat() * E));
}

}  // namespace glrl
