#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "hessvessel/augment.hpp"
#include "hessvessel/error.hpp"
#include "hessvessel/hessnet.hpp"
#include "hessvessel/loss.hpp"
#include "hessvessel/optim.hpp"
#include "hessvessel/rng.hpp"
#include "hessvessel/volume.hpp"

namespace hessvessel {

struct TrainConfig {
  std::size_t epochs = 50;
  double lr_max = 0.02;
  double lr_min = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
  double t0 = 10.0;
  double t_mult = 2.0;
  std::size_t patch_size = 32;
  std::size_t patches_per_volume = 16;
  double foreground_patch_fraction = 0.5;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  /// Adds one gamma + elastic augmented copy of every volume each epoch.
  bool augment = true;
  GammaRange gamma_range{};
  ElasticParams elastic{};
};

/// Throws ParameterError on out-of-range hyperparameters.
void validate(const TrainConfig& tc, const HessNetConfig& config);

struct Patch {
  std::array<std::size_t, 3> origin{};
  Volume image;
  BinaryMask target;
};

struct PatchSet {
  std::vector<Patch> patches;
  /// Set when foreground sampling was requested but the mask is empty.
  bool uniform_fallback = false;
};

/// Draws tc.patches_per_volume cubic patches of edge tc.patch_size. The first
/// ceil(fraction * count) are centred on a uniformly chosen mask voxel (origin
/// clamped into the grid), the rest are uniform. Throws ShapeError when the
/// patch does not fit.
PatchSet sample_patches(const Volume& volume, const BinaryMask& mask, const TrainConfig& tc,
                        Rng& rng);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Loss of the network on one patch and its exact gradient.
LossAndGrad loss_and_gradient(const ParamStore& params, const HessNetConfig& config,
                              const Volume& patch, const BinaryMask& target, const LossParams& lp);

/// Gradient of exp_log_tversky_loss(forward(patch), target) for every parameter.
std::vector<double> backward(const ParamStore& params, const HessNetConfig& config,
                             const Volume& patch, const BinaryMask& target, const LossParams& lp);

/// Loss of the network on one patch (double precision, no sigmoid clamping).
double patch_loss(const ParamStore& params, const HessNetConfig& config, const Volume& patch,
                  const BinaryMask& target, const LossParams& lp);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  std::optional<double> val_dsc;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  ParamStore params;
  OptState opt;
  std::vector<EpochRecord> history;
};

struct LabeledVolume {
  Volume volume;
  BinaryMask mask;
};

/// Raised when the loss turns non-finite; carries the parameters at the end of
/// the last completed epoch.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, TrainResult last_good)
      : NumericError(what), last_good_(std::move(last_good)) {}
  const TrainResult& last_good() const noexcept { return last_good_; }

 private:
  TrainResult last_good_;
};

struct TrainOptions {
  std::optional<LabeledVolume> validation;
  /// Starting point; a fresh init_params(config, tc.seed) when empty.
  std::optional<ParamStore> initial;
  /// Called after every epoch.
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Trains on `pairs`. Every epoch each volume contributes its z-normalized
/// original and, with tc.augment, one z-normalized gamma + elastic copy;
/// patches from all images are shuffled and each gets one AdamW step at the
/// scheduled learning rate. Fully deterministic for a fixed tc.seed.
TrainResult train(const std::vector<LabeledVolume>& pairs, const HessNetConfig& config,
                  const TrainConfig& tc, const LossParams& lp, const TrainOptions& options = {});

/// Seeds of the per-epoch random streams (documented for reproducibility).
std::uint64_t epoch_seed(std::uint64_t base, SeedStage stage, std::size_t epoch,
                         std::size_t index = 0);

}  // namespace hessvessel
