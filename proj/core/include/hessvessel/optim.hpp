#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hessvessel {

/// AdamW moment estimates.
struct OptState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  OptState() = default;
  explicit OptState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  friend bool operator==(const OptState&, const OptState&) = default;
};

struct AdamWParams {
  double lr = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

/// One AdamW step with decoupled weight decay:
///   p <- p - lr * wd * p
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
/// Throws ShapeError on length mismatch.
void adamw_step(std::span<double> params, std::span<const double> grads, OptState& state,
                const AdamWParams& hp);

/// Cosine annealing with warm restarts. Cycle i has length T_0 * T_mult^i
/// (in epochs); within a cycle lr falls from lr_max to lr_min along half a
/// cosine, and jumps back to lr_max at each restart. `t` may be fractional.
double cosine_warm_restarts_lr(double t, double t0, double t_mult, double lr_max, double lr_min);

}  // namespace hessvessel
