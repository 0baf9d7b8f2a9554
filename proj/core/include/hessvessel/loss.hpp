#pragma once

#include <cstdint>
#include <span>

#include "hessvessel/volume.hpp"

namespace hessvessel {

/// Exponential-logarithmic loss built on the Tversky index:
///   L = w_tversky * (-ln TI)^gamma_tversky + w_ce * mean[(-ln p_correct)^gamma_ce]
struct LossParams {
  double tversky_alpha = 0.3;  // false-positive weight
  double tversky_beta = 0.7;   // false-negative weight
  double gamma_tversky = 0.3;
  double gamma_ce = 0.3;
  double w_tversky = 0.5;
  double w_ce = 0.5;
  double smooth = 1.0;
};

/// Throws ParameterError unless every field is positive and the weights sum to 1.
void validate(const LossParams& lp);

/// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-7;

/// Soft Tversky index (TP + s) / (TP + alpha FP + beta FN + s).
double tversky_index(std::span<const double> probs, std::span<const std::uint8_t> target,
                     double alpha, double beta, double smooth);
double tversky_index(const Volume& probs, const BinaryMask& target, double alpha, double beta,
                     double smooth);

double exp_log_tversky_loss(std::span<const double> probs, std::span<const std::uint8_t> target,
                            const LossParams& lp);
double exp_log_tversky_loss(const Volume& probs, const BinaryMask& target, const LossParams& lp);

/// Loss of sigmoid(logits) and its gradient with respect to the logits.
double exp_log_tversky_loss_logits(std::span<const double> logits,
                                   std::span<const std::uint8_t> target, const LossParams& lp,
                                   std::span<double> grad_logits);

}  // namespace hessvessel
