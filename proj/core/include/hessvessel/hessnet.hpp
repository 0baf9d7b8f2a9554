#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hessvessel/volume.hpp"

namespace hessvessel {

/// Shape of the network.
///
/// Each feature block projects the input with a learned 3D convolution
/// (1 -> proj_channels), applies the fixed Hessian operator to every projected
/// channel, and maps the six Hessian components of each voxel through a small
/// per-channel MLP (6 -> mlp_hidden... -> 1, tanh on hidden layers). The
/// channel outputs are averaged to one map per block. The raw input (skip
/// connection) and the block maps are fused by two convolutions
/// ((1 + n_blocks) -> head_channels, tanh, head_channels -> 1, both with
/// head_kernel) and a sigmoid.
///
/// The defaults give 6581 trainable parameters.
struct HessNetConfig {
  std::size_t n_blocks = 4;
  std::size_t proj_channels = 6;
  std::size_t proj_kernel = 5;
  std::vector<std::size_t> mlp_hidden{15};
  std::size_t head_channels = 4;
  std::size_t head_kernel = 3;

  friend bool operator==(const HessNetConfig&, const HessNetConfig&) = default;
};

/// Throws ParameterError on zero widths/blocks or even kernel sizes.
void validate(const HessNetConfig& config);

/// Closed-form trainable parameter count.
std::size_t param_count(const HessNetConfig& config);

/// Named slice of the flat parameter vector.
struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  /// Inputs feeding each output unit, used for initialization.
  std::size_t fan_in = 0;
  bool is_bias = false;

  friend bool operator==(const ParamEntry&, const ParamEntry&) = default;
};

/// Ordered, contiguous layout of every trainable tensor for `config`.
std::vector<ParamEntry> make_layout(const HessNetConfig& config);

/// Flat 64-bit parameter vector plus its layout.
class ParamStore {
 public:
  ParamStore() = default;
  /// Zero-initialized store for `config`.
  explicit ParamStore(const HessNetConfig& config);

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<ParamEntry>& layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Throws ParameterError for an unknown name.
  const ParamEntry& entry(const std::string& name) const;
  std::span<double> tensor(const std::string& name);
  std::span<const double> tensor(const std::string& name) const;

  /// Throws NumericError naming the first tensor holding a non-finite value.
  void check_finite() const;

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<double> values_;
  std::vector<ParamEntry> layout_;
};

/// Weights ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)); biases zero.
ParamStore init_params(const HessNetConfig& config, std::uint64_t seed);

/// Voxelwise vessel probabilities, strictly inside (0, 1). The input is
/// expected to be z-normalized. Throws ShapeError if an axis is shorter than
/// proj_kernel or the head kernel, NumericError on non-finite parameters.
Volume forward(const ParamStore& params, const HessNetConfig& config, const Volume& volume);

namespace net {

/// Intermediate tensors kept by a training forward pass.
struct ForwardCache {
  Dims dims{};
  std::vector<double> input_padded;
  /// [block][channel] -> the 6 Hessian maps, and the tanh maps of every hidden layer.
  std::vector<std::vector<std::vector<std::vector<double>>>> hessian;
  std::vector<std::vector<std::vector<std::vector<double>>>> hidden;
  /// Head inputs (skip + block maps), clamp-padded by the head radius.
  std::vector<std::vector<double>> features_padded;
  /// tanh outputs of the first head convolution, clamp-padded.
  std::vector<std::vector<double>> head_hidden_padded;
  std::vector<double> head_hidden;
};

/// Pre-sigmoid outputs for `input` (x-fastest, length dims.size()).
/// When `cache` is non-null it is filled for backprop().
void forward_logits(const ParamStore& params, const HessNetConfig& config,
                    std::span<const double> input, const Dims& dims, std::span<double> logits,
                    ForwardCache* cache = nullptr);

/// Gradient of a scalar objective with respect to every parameter, given its
/// gradient with respect to the logits of the cached forward pass.
std::vector<double> backprop(const ParamStore& params, const HessNetConfig& config,
                             const ForwardCache& cache, std::span<const double> grad_logits);

/// Largest voxel distance the output at one voxel depends on.
std::size_t receptive_radius(const HessNetConfig& config);

/// Logistic function evaluated without overflow.
double sigmoid(double z) noexcept;

}  // namespace net

}  // namespace hessvessel
