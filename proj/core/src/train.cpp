#include "hessvessel/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hessvessel/error.hpp"

namespace hessvessel {

void validate(const TrainConfig& tc, const HessNetConfig& config) {
  validate(config);
  if (tc.epochs == 0) throw ParameterError("epochs must be at least 1");
  if (!(tc.lr_max > 0.0) || !(tc.lr_min >= 0.0) || tc.lr_min > tc.lr_max) {
    throw ParameterError("learning rates must satisfy 0 <= lr_min <= lr_max, lr_max > 0");
  }
  if (!(tc.beta1 > 0.0 && tc.beta1 < 1.0) || !(tc.beta2 > 0.0 && tc.beta2 < 1.0)) {
    throw ParameterError("AdamW betas must lie in (0, 1)");
  }
  if (!(tc.eps > 0.0)) throw ParameterError("AdamW eps must be positive");
  if (!(tc.weight_decay >= 0.0)) throw ParameterError("weight decay must be non-negative");
  if (!(tc.t0 > 0.0) || !(tc.t_mult >= 1.0)) {
    throw ParameterError("scheduler needs T_0 > 0 and T_mult >= 1");
  }
  if (tc.patch_size < std::max(config.proj_kernel, config.head_kernel)) {
    throw ParameterError("patch_size is smaller than a network kernel");
  }
  if (tc.patches_per_volume == 0) throw ParameterError("patches_per_volume must be at least 1");
  if (!(tc.foreground_patch_fraction >= 0.0 && tc.foreground_patch_fraction <= 1.0)) {
    throw ParameterError("foreground_patch_fraction must lie in [0, 1]");
  }
  if (!(tc.threshold > 0.0 && tc.threshold < 1.0)) {
    throw ParameterError("threshold must lie in (0, 1)");
  }
  if (tc.gamma_range.lo > tc.gamma_range.hi) throw ParameterError("gamma range is reversed");
  if (!(tc.elastic.max_displacement_voxels >= 0.0)) {
    throw ParameterError("elastic displacement must be non-negative");
  }
  for (std::size_t g : tc.elastic.control_grid) {
    if (g < 2) throw ParameterError("elastic control grid needs at least 2 points per axis");
  }
}

std::uint64_t epoch_seed(std::uint64_t base, SeedStage stage, std::size_t epoch,
                         std::size_t index) {
  return derive_seed(base, stage, {epoch, index});
}

namespace {

Patch extract(const Volume& volume, const BinaryMask& mask, std::array<std::size_t, 3> o,
              std::size_t p) {
  const Dims pd{p, p, p};
  Volume img(pd, volume.spacing());
  BinaryMask tgt(pd);
  for (std::size_t z = 0; z < p; ++z) {
    for (std::size_t y = 0; y < p; ++y) {
      for (std::size_t x = 0; x < p; ++x) {
        img(x, y, z) = volume(o[0] + x, o[1] + y, o[2] + z);
        tgt.set(x, y, z, mask(o[0] + x, o[1] + y, o[2] + z) != 0);
      }
    }
  }
  return Patch{o, std::move(img), std::move(tgt)};
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

PatchSet sample_patches(const Volume& volume, const BinaryMask& mask, const TrainConfig& tc,
                        Rng& rng) {
  const Dims& d = volume.dims();
  require_same_dims(d, mask.dims(), "sample_patches");
  const std::size_t p = tc.patch_size;
  if (p == 0 || p > d.nx || p > d.ny || p > d.nz) {
    throw ShapeError("patch of edge " + std::to_string(p) + " does not fit the volume");
  }
  PatchSet out;
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) positives.push_back(i);
  }
  auto n_fg = static_cast<std::size_t>(
      std::ceil(tc.foreground_patch_fraction * static_cast<double>(tc.patches_per_volume)));
  n_fg = std::min(n_fg, tc.patches_per_volume);
  if (n_fg > 0 && positives.empty()) {
    out.uniform_fallback = true;
    n_fg = 0;
  }
  out.patches.reserve(tc.patches_per_volume);
  for (std::size_t k = 0; k < tc.patches_per_volume; ++k) {
    std::array<std::size_t, 3> o{};
    if (k < n_fg) {
      const std::size_t idx = positives[uniform_index(rng, positives.size())];
      const std::array<std::size_t, 3> c{idx % d.nx, (idx / d.nx) % d.ny, idx / (d.nx * d.ny)};
      for (int a = 0; a < 3; ++a) {
        const std::size_t lo = c[a] >= p / 2 ? c[a] - p / 2 : 0;
        o[a] = std::min(lo, d[a] - p);
      }
    } else {
      for (int a = 0; a < 3; ++a) o[a] = uniform_index(rng, d[a] - p + 1);
    }
    out.patches.push_back(extract(volume, mask, o, p));
  }
  return out;
}

LossAndGrad loss_and_gradient(const ParamStore& params, const HessNetConfig& config,
                              const Volume& patch, const BinaryMask& target,
                              const LossParams& lp) {
  require_same_dims(patch.dims(), target.dims(), "loss_and_gradient");
  const Dims& d = patch.dims();
  std::vector<double> input(patch.data().begin(), patch.data().end());
  std::vector<double> logits(d.size()), grad_logits(d.size());
  net::ForwardCache cache;
  net::forward_logits(params, config, input, d, logits, &cache);
  LossAndGrad out;
  out.loss = exp_log_tversky_loss_logits(logits, target.data(), lp, grad_logits);
  if (!std::isfinite(out.loss)) throw NumericError("loss is not finite");
  out.grad = net::backprop(params, config, cache, grad_logits);
  return out;
}

std::vector<double> backward(const ParamStore& params, const HessNetConfig& config,
                             const Volume& patch, const BinaryMask& target, const LossParams& lp) {
  return loss_and_gradient(params, config, patch, target, lp).grad;
}

double patch_loss(const ParamStore& params, const HessNetConfig& config, const Volume& patch,
                  const BinaryMask& target, const LossParams& lp) {
  require_same_dims(patch.dims(), target.dims(), "patch_loss");
  const Dims& d = patch.dims();
  std::vector<double> input(patch.data().begin(), patch.data().end());
  std::vector<double> logits(d.size()), unused(d.size());
  net::forward_logits(params, config, input, d, logits);
  return exp_log_tversky_loss_logits(logits, target.data(), lp, unused);
}

namespace {

double validation_dsc(const ParamStore& params, const HessNetConfig& config,
                      const Volume& normalized, const BinaryMask& mask, double threshold) {
  const Volume prob = forward(params, config, normalized);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const bool p = prob[i] > threshold;
    const bool g = mask[i] != 0;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

}  // namespace

TrainResult train(const std::vector<LabeledVolume>& pairs, const HessNetConfig& config,
                  const TrainConfig& tc, const LossParams& lp, const TrainOptions& options) {
  validate(tc, config);
  validate(lp);
  if (pairs.empty()) throw ParameterError("training needs at least one labelled volume");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    require_same_dims(pairs[i].volume.dims(), pairs[i].mask.dims(),
                      ("training pair " + std::to_string(i)).c_str());
  }

  TrainResult result;
  result.params = options.initial ? *options.initial : init_params(config, tc.seed);
  if (result.params.layout() != make_layout(config)) {
    throw ParameterError("initial parameters do not match the network configuration");
  }
  result.opt = OptState(result.params.size());

  std::vector<Volume> normalized;
  normalized.reserve(pairs.size());
  for (const auto& pr : pairs) normalized.push_back(z_normalize(pr.volume));
  std::optional<Volume> val_normalized;
  if (options.validation) {
    require_same_dims(options.validation->volume.dims(), options.validation->mask.dims(),
                      "validation pair");
    val_normalized = z_normalize(options.validation->volume);
  }

  AdamWParams hp{tc.lr_max, tc.beta1, tc.beta2, tc.eps, tc.weight_decay};
  TrainResult last_good = result;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    std::vector<Patch> patches;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      Rng rng(epoch_seed(tc.seed, SeedStage::kPatches, epoch, 2 * i));
      auto set = sample_patches(normalized[i], pairs[i].mask, tc, rng);
      for (auto& p : set.patches) patches.push_back(std::move(p));
      if (tc.augment) {
        const Volume g = random_gamma(pairs[i].volume, tc.gamma_range,
                                      epoch_seed(tc.seed, SeedStage::kGamma, epoch, i));
        auto warped = elastic_deform(g, pairs[i].mask, tc.elastic,
                                     epoch_seed(tc.seed, SeedStage::kElastic, epoch, i));
        const Volume aug = z_normalize(warped.volume);
        Rng arng(epoch_seed(tc.seed, SeedStage::kPatches, epoch, 2 * i + 1));
        auto aset = sample_patches(aug, *warped.mask, tc, arng);
        for (auto& p : aset.patches) patches.push_back(std::move(p));
      }
    }
    Rng shuffle_rng(epoch_seed(tc.seed, SeedStage::kShuffle, epoch));
    std::shuffle(patches.begin(), patches.end(), shuffle_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cosine_warm_restarts_lr(static_cast<double>(epoch), tc.t0, tc.t_mult, tc.lr_max,
                                     tc.lr_min);
    double loss_sum = 0.0;
    const double n_patches = static_cast<double>(patches.size());
    for (std::size_t k = 0; k < patches.size(); ++k) {
      LossAndGrad lg;
      try {
        lg = loss_and_gradient(result.params, config, patches[k].image, patches[k].target, lp);
      } catch (const NumericError& e) {
        throw TrainingAborted("training aborted in epoch " + std::to_string(epoch) + ": " +
                                  e.what(),
                              std::move(last_good));
      }
      loss_sum += lg.loss;
      hp.lr = cosine_warm_restarts_lr(static_cast<double>(epoch) + static_cast<double>(k) / n_patches,
                                      tc.t0, tc.t_mult, tc.lr_max, tc.lr_min);
      adamw_step(result.params.values(), lg.grad, result.opt, hp);
    }
    rec.mean_loss = loss_sum / n_patches;
    if (val_normalized) {
      rec.val_dsc = validation_dsc(result.params, config, *val_normalized,
                                   options.validation->mask, tc.threshold);
    }
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    last_good = result;
  }
  return result;
}

}  // namespace hessvessel
