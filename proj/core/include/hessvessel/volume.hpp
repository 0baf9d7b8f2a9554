#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hessvessel {

/// Voxel counts along x, y, z.
struct Dims {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t nz = 0;

  constexpr std::size_t size() const noexcept { return nx * ny * nz; }
  constexpr std::size_t operator[](std::size_t axis) const noexcept {
    return axis == 0 ? nx : (axis == 1 ? ny : nz);
  }
  /// Flat offset in x-fastest order.
  constexpr std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return x + nx * (y + ny * z);
  }
  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

/// Millimetres per voxel along x, y, z.
using Spacing = std::array<double, 3>;

/// Scalar 3D image. Values are stored as 32-bit floats in x-fastest order.
class Volume {
 public:
  Volume() = default;
  /// Zero-filled volume. Throws ShapeError on a zero extent, ParameterError on
  /// non-positive spacing.
  explicit Volume(Dims dims, Spacing spacing = {1.0, 1.0, 1.0}, float fill = 0.0f);
  /// Takes ownership of `data`; its length must equal dims.size().
  Volume(Dims dims, Spacing spacing, std::vector<float> data);

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  float& operator()(std::size_t x, std::size_t y, std::size_t z) noexcept {
    return data_[dims_.index(x, y, z)];
  }
  float operator()(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return data_[dims_.index(x, y, z)];
  }
  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Dims dims_{};
  Spacing spacing_{1.0, 1.0, 1.0};
  std::vector<float> data_;
};

/// Binary label image, every element 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Dims dims, std::uint8_t fill = 0);
  /// Throws ShapeError on length mismatch, ParameterError on values other than 0/1.
  BinaryMask(Dims dims, std::vector<std::uint8_t> data);

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  std::uint8_t operator[](std::size_t i) const noexcept { return data_[i]; }
  std::uint8_t operator()(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return data_[dims_.index(x, y, z)];
  }
  void set(std::size_t i, bool on) noexcept { data_[i] = on ? 1 : 0; }
  void set(std::size_t x, std::size_t y, std::size_t z, bool on) noexcept {
    set(dims_.index(x, y, z), on);
  }

  std::size_t count() const noexcept;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Dims dims_{};
  std::vector<std::uint8_t> data_;
};

/// Builds a mask from a volume: voxel is set where value >= 0.5.
BinaryMask mask_from_volume(const Volume& volume);
/// Mask as a {0,1}-valued float volume.
Volume volume_from_mask(const BinaryMask& mask, Spacing spacing = {1.0, 1.0, 1.0});

/// Standardizes to zero mean and unit standard deviation over all voxels.
/// Throws DegenerateInputError on fewer than two voxels or zero variance.
Volume z_normalize(const Volume& volume);

/// Zeroes every voxel outside the mask. Throws ShapeError on dims mismatch.
Volume apply_mask(const Volume& volume, const BinaryMask& mask);
BinaryMask apply_mask(const BinaryMask& labels, const BinaryMask& mask);

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);

void require_same_dims(const Dims& a, const Dims& b, const char* what);

}  // namespace hessvessel
