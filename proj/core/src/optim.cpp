#include "hessvessel/optim.hpp"

#include <cmath>
#include <numbers>

#include "hessvessel/error.hpp"

namespace hessvessel {

void adamw_step(std::span<double> params, std::span<const double> grads, OptState& state,
                const AdamWParams& hp) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adamw_step: parameter, gradient and state lengths differ");
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(hp.beta1, t);
  const double bc2 = 1.0 - std::pow(hp.beta2, t);
  const double decay = 1.0 - hp.lr * hp.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    params[i] *= decay;
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
  }
}

double cosine_warm_restarts_lr(double t, double t0, double t_mult, double lr_max, double lr_min) {
  if (!(t0 > 0.0)) throw ParameterError("scheduler T_0 must be positive");
  if (!(t_mult >= 1.0)) throw ParameterError("scheduler T_mult must be >= 1");
  if (!(t >= 0.0)) throw ParameterError("scheduler time must be non-negative");
  double t_cur = 0.0;
  double period = t0;
  if (t_mult == 1.0) {
    t_cur = std::fmod(t, t0);
  } else {
    double start = 0.0;
    while (t >= start + period) {
      start += period;
      period *= t_mult;
    }
    t_cur = t - start;
  }
  return lr_min + (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t_cur / period)) / 2.0;
}

}  // namespace hessvessel
