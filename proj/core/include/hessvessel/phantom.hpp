#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hessvessel/volume.hpp"

namespace hessvessel {

using Point3 = std::array<double, 3>;

/// Straight bright cylinder with hemispherical caps (capsule) between two
/// voxel-coordinate points.
struct Tube {
  Point3 start{};
  Point3 end{};
  double radius = 1.0;
  double intensity = 1.0;
};

/// Synthetic tubular phantom description.
struct PhantomSpec {
  Dims dims{32, 32, 32};
  Spacing spacing{1.0, 1.0, 1.0};
  std::vector<Tube> tubes;
  double background = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct Phantom {
  Volume volume;
  BinaryMask mask;
};

/// Throws SpecError if a tube has a non-positive radius, an endpoint outside
/// the grid, or an intensity not above the background.
void validate(const PhantomSpec& spec);

/// Rasterizes the phantom. A voxel is foreground when the distance from its
/// centre to any tube segment is <= that tube's radius; where tubes overlap the
/// brightest wins. Gaussian noise N(0, noise_sigma) is added from `seed`.
Phantom make_phantom(const PhantomSpec& spec);

/// Euclidean distance from `p` to the segment [a, b].
double point_segment_distance(const Point3& p, const Point3& a, const Point3& b);

/// Parameters for drawing a random multi-tube phantom.
struct RandomTubeOptions {
  std::size_t n_tubes = 4;
  double radius_min = 1.5;
  double radius_max = 3.0;
  double foreground = 1.0;
  double background = 0.2;
  double noise_sigma = 0.0;
  /// Minimum tube length as a fraction of the smallest grid extent.
  double min_length_fraction = 0.6;
};

/// Random tubes with endpoints inside the grid, drawn from `seed`.
PhantomSpec random_tube_spec(Dims dims, const RandomTubeOptions& options, std::uint64_t seed);

/// JSON round-trip of the phantom description. Unknown keys are rejected.
PhantomSpec phantom_spec_from_json(const std::string& text);
std::string phantom_spec_to_json(const PhantomSpec& spec);

}  // namespace hessvessel
