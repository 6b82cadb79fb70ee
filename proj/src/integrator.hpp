// Shared explicit time stepper behind every flow in dynamics.cpp/kernel.cpp.
#pragma once

#include <algorithm>
#include <cmath>

#include "glrl/dynamics.hpp"

namespace glrl::detail {

void record_diagnostics(Trajectory& tr, const Matrix& W);

/// Integrates dx/dt = rate(x) in place; x holds the final state on return.
///
/// rate(x, out)  writes the vector field into out
/// to_w(x)       maps the internal state to the recorded matrix W
/// loss(W)       objective value at W
/// w_norm(x)     ||W||_F, checked against the overflow guard every step
///
/// State must support x + h * k, .norm(), .allFinite().
/// Euclidean norm that survives squares underflowing (tiny initializations).
template <class State>
double safe_norm(const State& k) {
  const double n = k.norm();
  return n > 0.0 ? n : k.stableNorm();
}

template <class State, class RateFn, class MapFn, class LossFn, class NormFn>
Trajectory integrate(State& x, RateFn&& rate, MapFn&& to_w, LossFn&& loss, NormFn&& w_norm,
                     const IntegratorConfig& cfg, double horizon) {
  cfg.validate();
  require(horizon >= 0.0, ErrorCode::InvalidInput, "horizon must be nonnegative");
  Trajectory tr;
  const bool sampled = !cfg.sample_times.empty();
  std::size_t next_sample = 0;
  if (sampled) {
    // t = 0 is recorded anyway
    while (next_sample < cfg.sample_times.size() && cfg.sample_times[next_sample] <= 0.0)
      ++next_sample;
  }

  State k1 = x, k2 = x, k3 = x, k4 = x, tmp = x;
  Matrix last_w;
  std::int64_t last_recorded = -1;

  auto record = [&](double t, const State& s, double rn, std::int64_t n) {
    Matrix w = to_w(s);
    tr.times.push_back(t);
    tr.loss.push_back(loss(w));
    tr.grad_norm.push_back(rn);
    if (cfg.diagnostics) record_diagnostics(tr, w);
    last_w = w;
    tr.states.push_back(std::move(w));
    last_recorded = n;
  };

  double t = 0.0;
  std::int64_t n = 0;
  double v = 0.0;
  double alpha_pow = 1.0;
  rate(x, k1);
  double rn = safe_norm(k1);
  require(std::isfinite(rn), ErrorCode::InvalidInput, "non-finite vector field at t = 0");
  record(t, x, rn, n);

  const bool adaptive = cfg.scheme == Scheme::AdaptiveGD;
  for (;;) {
    if (rn <= cfg.stop_grad_norm) {
      tr.termination = Termination::Stationary;
      break;
    }
    if (t >= horizon) {
      tr.termination = Termination::Horizon;
      break;
    }
    if (n >= cfg.max_steps) {
      tr.termination = Termination::MaxSteps;
      break;
    }

    double h = cfg.step;
    if (adaptive) {
      const double a = cfg.adaptive->alpha;
      v = a * v + (1.0 - a) * rn * rn;
      alpha_pow *= a;
      h = cfg.step / (std::sqrt(v / (1.0 - alpha_pow)) + cfg.adaptive->epsilon);
    }
    if (cfg.max_relative_step > 0.0 && rn > 0.0) {
      h = std::min(h, cfg.max_relative_step * x.norm() / rn);
    }
    double target = horizon;
    if (sampled && next_sample < cfg.sample_times.size())
      target = std::min(target, cfg.sample_times[next_sample]);
    bool landed = false;
    // absorb rounding so a horizon that is a multiple of the step lands on it
    if (t + h * (1.0 + 1e-9) >= target) {
      h = target - t;
      landed = true;
    }

    if (cfg.scheme == Scheme::RK4) {
      tmp = x + (0.5 * h) * k1;
      rate(tmp, k2);
      tmp = x + (0.5 * h) * k2;
      rate(tmp, k3);
      tmp = x + h * k3;
      rate(tmp, k4);
      x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      x = x + h * k1;
    }
    t = landed ? target : t + h;
    ++n;

    if (!x.allFinite()) {
      tr.termination = Termination::Diverged;
      break;
    }
    rate(x, k1);
    rn = safe_norm(k1);
    bool at_sample = false;
    if (sampled && landed && next_sample < cfg.sample_times.size() &&
        t == cfg.sample_times[next_sample]) {
      at_sample = true;
      ++next_sample;
    }
    const double wnorm = w_norm(x);
    if (!std::isfinite(rn) || !std::isfinite(wnorm) || wnorm >= cfg.overflow_guard) {
      if (std::isfinite(wnorm) && std::isfinite(rn)) record(t, x, rn, n);
      tr.termination = Termination::Diverged;
      break;
    }
    bool rec = sampled ? at_sample : (n % cfg.record_every == 0);
    if (!rec && cfg.record_min_dist > 0.0)
      rec = (to_w(x) - last_w).norm() >= cfg.record_min_dist;
    if (rec) record(t, x, rn, n);
  }
  if (last_recorded != n && tr.termination != Termination::Diverged) record(t, x, rn, n);
  tr.steps = n;
  return tr;
}

}  // namespace glrl::detail
