#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hessvessel/volume.hpp"

namespace hessvessel {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Voxelwise counts. Throws ShapeError on dims mismatch.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

/// Overlap rates. A metric whose denominator is zero is left empty.
struct RateMetrics {
  std::optional<double> accuracy;
  std::optional<double> dsc;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
};

RateMetrics rate_metrics(const ConfusionCounts& c);

using Point3i = std::array<std::int64_t, 3>;

/// Coordinates of every set voxel, x-fastest order.
std::vector<Point3i> mask_points(const BinaryMask& mask);

/// Average Hausdorff distance: half the sum of the mean nearest-neighbour
/// distance from G to S and from S to G. Distances are in voxels, or in mm
/// when `spacing` is given. Throws UndefinedMetricError if either set is empty.
double ahd(std::span<const Point3i> g, std::span<const Point3i> s,
           std::optional<Spacing> spacing = std::nullopt);
/// All-pairs reference implementation.
double ahd_brute(std::span<const Point3i> g, std::span<const Point3i> s,
                 std::optional<Spacing> spacing = std::nullopt);

/// DSC in percent divided by log10 of the parameter count.
/// Throws ParameterError if n_params < 2 or dsc_percent is outside [0, 100].
double dsclog(double dsc_percent, double n_params);

struct MetricsReport {
  ConfusionCounts counts;
  RateMetrics rates;
  std::optional<double> ahd;
  /// "voxel" or "mm".
  std::string ahd_units = "voxel";
  std::optional<std::uint64_t> n_params;
  std::optional<double> dsclog;
};

/// Full evaluation of a prediction against ground truth. AHD is left empty
/// when either mask is empty; dsclog needs n_params and a defined DSC.
MetricsReport evaluate(const BinaryMask& pred, const BinaryMask& gt,
                       std::optional<Spacing> spacing = std::nullopt,
                       std::optional<std::uint64_t> n_params = std::nullopt);

/// JSON object; undefined metrics are written as null and listed under "undefined".
std::string to_json(const MetricsReport& report, int indent = 2);

}  // namespace hessvessel
