#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>

#include "hessvessel/volume.hpp"

namespace hessvessel {

struct GammaRange {
  double lo = -0.3;
  double hi = 0.3;
};

/// Contrast jitter. Intensities are min-max rescaled to [0,1], raised to
/// gamma = exp(u) with u ~ U[lo, hi], and mapped back to the original range.
/// A constant volume is returned unchanged.
Volume random_gamma(const Volume& volume, GammaRange log_gamma_range, std::uint64_t seed);

/// Same transform with an explicit exponent.
Volume apply_gamma(const Volume& volume, double gamma);

struct ElasticParams {
  std::array<std::size_t, 3> control_grid{7, 7, 7};
  double max_displacement_voxels = 7.0;
};

struct ElasticResult {
  Volume volume;
  std::optional<BinaryMask> mask;
};

/// Dense random elastic deformation. Each control point receives a random
/// displacement (uniform per component in [-max, +max]); the dense field is the
/// trilinear interpolation of the control grid spanning the volume. The volume
/// is resampled trilinearly, the companion mask by nearest neighbour, both with
/// border clamping and the same field.
ElasticResult elastic_deform(const Volume& volume, const std::optional<BinaryMask>& companion_mask,
                             const ElasticParams& params, std::uint64_t seed);

}  // namespace hessvessel
