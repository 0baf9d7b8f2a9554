#include "hessvessel/volume.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "hessvessel/error.hpp"

namespace hessvessel {

namespace {

void check_geometry(const Dims& dims, const Spacing& spacing) {
  if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) {
    throw ShapeError("volume dimensions must be positive");
  }
  for (double s : spacing) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ParameterError("voxel spacing must be positive and finite");
    }
  }
}

}  // namespace

Volume::Volume(Dims dims, Spacing spacing, float fill)
    : dims_(dims), spacing_(spacing) {
  check_geometry(dims_, spacing_);
  data_.assign(dims_.size(), fill);
}

Volume::Volume(Dims dims, Spacing spacing, std::vector<float> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  check_geometry(dims_, spacing_);
  if (data_.size() != dims_.size()) {
    throw ShapeError("volume data length " + std::to_string(data_.size()) +
                     " does not match dims (" + std::to_string(dims_.size()) + ")");
  }
}

BinaryMask::BinaryMask(Dims dims, std::uint8_t fill) : dims_(dims) {
  if (dims.size() == 0) throw ShapeError("mask dimensions must be positive");
  if (fill > 1) throw ParameterError("mask fill must be 0 or 1");
  data_.assign(dims.size(), fill);
}

BinaryMask::BinaryMask(Dims dims, std::vector<std::uint8_t> data)
    : dims_(dims), data_(std::move(data)) {
  if (dims.size() == 0) throw ShapeError("mask dimensions must be positive");
  if (data_.size() != dims_.size()) throw ShapeError("mask data length does not match dims");
  for (auto v : data_) {
    if (v > 1) throw ParameterError("mask values must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::accumulate(data_.begin(), data_.end(), std::size_t{0}));
}

BinaryMask mask_from_volume(const Volume& volume) {
  BinaryMask mask(volume.dims());
  for (std::size_t i = 0; i < volume.size(); ++i) mask.set(i, volume[i] >= 0.5f);
  return mask;
}

Volume volume_from_mask(const BinaryMask& mask, Spacing spacing) {
  Volume out(mask.dims(), spacing);
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0f : 0.0f;
  return out;
}

void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": dims mismatch (" + std::to_string(a.nx) + "x" +
                     std::to_string(a.ny) + "x" + std::to_string(a.nz) + " vs " +
                     std::to_string(b.nx) + "x" + std::to_string(b.ny) + "x" +
                     std::to_string(b.nz) + ")");
  }
}

Volume z_normalize(const Volume& volume) {
  const std::size_t n = volume.size();
  if (n < 2) throw DegenerateInputError("z-normalization needs at least two voxels");
  // Two-pass in double precision.
  double sum = 0.0;
  for (float v : volume.data()) sum += v;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (float v : volume.data()) {
    const double d = v - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw DegenerateInputError("z-normalization of a constant volume");
  Volume out(volume.dims(), volume.spacing());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>((volume[i] - mean) / sd);
  }
  return out;
}

Volume apply_mask(const Volume& volume, const BinaryMask& mask) {
  require_same_dims(volume.dims(), mask.dims(), "apply_mask");
  Volume out = volume;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask[i]) out[i] = 0.0f;
  }
  return out;
}

BinaryMask apply_mask(const BinaryMask& labels, const BinaryMask& mask) {
  return mask_and(labels, mask);
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.dims(), b.dims(), "mask_and");
  BinaryMask out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a[i] && b[i]);
  return out;
}

}  // namespace hessvessel
