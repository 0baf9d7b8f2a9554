#include "hessvessel/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hessvessel/error.hpp"
#include "hessvessel/hessnet.hpp"

namespace hessvessel {

namespace {

// Floor for -ln(TI) so the powered term keeps a finite slope at TI -> 1.
constexpr double kMinNegLog = 1e-12;

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("loss: prediction and target lengths differ");
}

struct TverskySums {
  double tp = 0.0, fp = 0.0, fn = 0.0;
};

double tversky_from_sums(const TverskySums& s, double alpha, double beta, double smooth) {
  return (s.tp + smooth) / (s.tp + alpha * s.fp + beta * s.fn + smooth);
}

// Powered negative log of a clamped probability.
double ce_term(double p_correct, double gamma) {
  const double pc = std::clamp(p_correct, kProbEpsilon, 1.0 - kProbEpsilon);
  return std::pow(-std::log(pc), gamma);
}

}  // namespace

void validate(const LossParams& lp) {
  for (double v : {lp.tversky_alpha, lp.tversky_beta, lp.gamma_tversky, lp.gamma_ce, lp.w_tversky,
                   lp.w_ce, lp.smooth}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError("loss parameters must be positive");
  }
  if (std::fabs(lp.w_tversky + lp.w_ce - 1.0) > 1e-12) {
    throw ParameterError("loss term weights must sum to 1");
  }
}

double tversky_index(std::span<const double> probs, std::span<const std::uint8_t> target,
                     double alpha, double beta, double smooth) {
  check_lengths(probs.size(), target.size());
  TverskySums s;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (target[i]) {
      s.tp += p;
      s.fn += 1.0 - p;
    } else {
      s.fp += p;
    }
  }
  return tversky_from_sums(s, alpha, beta, smooth);
}

double tversky_index(const Volume& probs, const BinaryMask& target, double alpha, double beta,
                     double smooth) {
  require_same_dims(probs.dims(), target.dims(), "tversky_index");
  std::vector<double> p(probs.data().begin(), probs.data().end());
  return tversky_index(p, target.data(), alpha, beta, smooth);
}

double exp_log_tversky_loss(std::span<const double> probs, std::span<const std::uint8_t> target,
                            const LossParams& lp) {
  validate(lp);
  check_lengths(probs.size(), target.size());
  if (probs.empty()) throw ShapeError("loss of an empty prediction");
  const double ti = tversky_index(probs, target, lp.tversky_alpha, lp.tversky_beta, lp.smooth);
  const double neg_log_ti = std::max(-std::log(ti), kMinNegLog);
  double ce = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    ce += ce_term(target[i] ? probs[i] : 1.0 - probs[i], lp.gamma_ce);
  }
  ce /= static_cast<double>(probs.size());
  return lp.w_tversky * std::pow(neg_log_ti, lp.gamma_tversky) + lp.w_ce * ce;
}

double exp_log_tversky_loss(const Volume& probs, const BinaryMask& target, const LossParams& lp) {
  require_same_dims(probs.dims(), target.dims(), "exp_log_tversky_loss");
  std::vector<double> p(probs.data().begin(), probs.data().end());
  return exp_log_tversky_loss(p, target.data(), lp);
}

double exp_log_tversky_loss_logits(std::span<const double> logits,
                                   std::span<const std::uint8_t> target, const LossParams& lp,
                                   std::span<double> grad) {
  validate(lp);
  check_lengths(logits.size(), target.size());
  check_lengths(logits.size(), grad.size());
  const std::size_t n = logits.size();
  if (n == 0) throw ShapeError("loss of an empty prediction");
  const double inv_n = 1.0 / static_cast<double>(n);

  // p = sigmoid(z) and q = 1 - p, each evaluated directly for accuracy.
  std::vector<double> p(n), q(n);
  TverskySums s;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = net::sigmoid(logits[i]);
    q[i] = net::sigmoid(-logits[i]);
    if (target[i]) {
      s.tp += p[i];
      s.fn += q[i];
    } else {
      s.fp += p[i];
    }
  }
  const double a = lp.tversky_alpha, b = lp.tversky_beta;
  const double num = s.tp + lp.smooth;
  const double den = s.tp + a * s.fp + b * s.fn + lp.smooth;
  const double ti = num / den;
  const double raw_neg_log = -std::log(ti);
  const double neg_log_ti = std::max(raw_neg_log, kMinNegLog);
  const double tversky_term = std::pow(neg_log_ti, lp.gamma_tversky);
  // dL/dTI; zero where the floor is active.
  const double dl_dti = raw_neg_log > kMinNegLog
                            ? lp.w_tversky * lp.gamma_tversky *
                                  std::pow(neg_log_ti, lp.gamma_tversky - 1.0) * (-1.0 / ti)
                            : 0.0;
  const double inv_den2 = 1.0 / (den * den);
  // dTI/dp for foreground and background voxels.
  const double dti_fg = (den - num * (1.0 - b)) * inv_den2;
  const double dti_bg = (-num * a) * inv_den2;

  double ce = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool fg = target[i] != 0;
    const double pq = p[i] * q[i];  // dp/dz
    const double pc_raw = fg ? p[i] : q[i];
    const double pc = std::clamp(pc_raw, kProbEpsilon, 1.0 - kProbEpsilon);
    const double nl = -std::log(pc);
    ce += std::pow(nl, lp.gamma_ce);
    double g = dl_dti * (fg ? dti_fg : dti_bg) * pq;
    if (pc == pc_raw) {
      // d/dz (-ln pc)^g = g (-ln pc)^(g-1) * (-1/pc) * dpc/dz, dpc/dz = +-pq.
      const double dce_dpc = lp.gamma_ce * std::pow(nl, lp.gamma_ce - 1.0) * (-1.0 / pc);
      g += lp.w_ce * inv_n * dce_dpc * (fg ? pq : -pq);
    }
    grad[i] = g;
  }
  ce *= inv_n;
  return lp.w_tversky * tversky_term + lp.w_ce * ce;
}

}  // namespace hessvessel
