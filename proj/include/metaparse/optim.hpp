#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "metaparse/params.hpp"

namespace metaparse {

/// p <- p - lr * g, with the rate chosen per parameter group.
inline void sgd_step(ParamSet& params, const Gradients& grads, const GroupRates& lr) {
  require_aligned(params, grads, "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const real rate = static_cast<real>(lr[params[i].group]);
    auto& p = params[i].value.values();
    const auto& g = grads[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= rate * g[j];
  }
}

inline void sgd_step(ParamSet& params, const Gradients& grads, double lr) {
  sgd_step(params, grads, GroupRates::uniform(lr));
}

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  Gradients m;
  Gradients v;

  static AdamState for_params(const ParamSet& params) {
    AdamState s;
    s.m = params.zero_gradients();
    s.v = params.zero_gradients();
    return s;
  }
};

/// Bias-corrected Adam. `weight_decay` is decoupled (p -= lr * wd * p), as in
/// AdamW; a group with rate 0 is left bit-identical.
inline void adam_step(AdamState& state, ParamSet& params, const Gradients& grads, const GroupRates& lr,
                      double weight_decay = 0.0) {
  require_aligned(params, grads, "adam_step");
  if (state.m.empty() && state.v.empty()) {
    state.m = params.zero_gradients();
    state.v = params.zero_gradients();
  }
  require_aligned(params, state.m, "adam_step (first moment)");
  require_aligned(params, state.v, "adam_step (second moment)");
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double rate = lr[params[i].group];
    auto& p = params[i].value.values();
    auto& m = state.m[i].values();
    auto& v = state.v[i].values();
    const auto& g = grads[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = static_cast<real>(b1 * m[j] + (1.0 - b1) * g[j]);
      v[j] = static_cast<real>(b2 * v[j] + (1.0 - b2) * g[j] * g[j]);
      if (rate == 0.0) continue;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      double next = p[j] - rate * mhat / (std::sqrt(vhat) + state.eps);
      if (weight_decay != 0.0) next -= rate * weight_decay * p[j];
      p[j] = static_cast<real>(next);
    }
  }
}

inline void adam_step(AdamState& state, ParamSet& params, const Gradients& grads, double lr) {
  adam_step(state, params, grads, GroupRates::uniform(lr));
}

/// Linear warm-up from 0 to base_lr over the first warmup_frac * total_steps
/// steps, then half-cosine decay to 0 at total_steps. `step` is clamped.
inline double cosine_warmup_lr(long step, long total_steps, double warmup_frac, double base_lr) {
  if (total_steps <= 0) return base_lr;
  step = std::clamp(step, 0L, total_steps);
  const double warmup = warmup_frac * static_cast<double>(total_steps);
  const double s = static_cast<double>(step);
  if (s < warmup) return base_lr * s / warmup;
  const double span = static_cast<double>(total_steps) - warmup;
  if (span <= 0) return base_lr;
  const double progress = (s - warmup) / span;
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace metaparse
