#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hessvessel/volume.hpp"

namespace hessvessel {

/// Normalized histogram of strictly positive intensities.
struct IntensityHistogram {
  /// bin_count + 1 edges; the first edge is 0 (exclusive), the last the maximum.
  std::vector<double> edges;
  /// Frequencies summing to 1.
  std::vector<double> freq;

  std::size_t bin_count() const noexcept { return freq.size(); }
};

/// Histogram over (0, upper], upper defaulting to the volume maximum. Pass a
/// shared `upper` to make histograms of several volumes comparable. Zero and
/// negative voxels are ignored, as are values above `upper`. Throws
/// DegenerateInputError if no voxel is in range, ParameterError if bins < 2.
IntensityHistogram intensity_histogram(const Volume& volume, std::size_t bins = 256,
                                       std::optional<double> upper = std::nullopt);

/// max_i |a_i - b_i| / max(max_i a_i, max_i b_i). Throws ShapeError if the
/// bin edges differ.
double histogram_distance(const IntensityHistogram& a, const IntensityHistogram& b);

/// Symmetric n x n matrix, row-major.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> d;

  double operator()(std::size_t i, std::size_t j) const noexcept { return d[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return d[i * n + j]; }
};

/// Throws ShapeError on fewer than two histograms (or incompatible bins).
DistanceMatrix distance_matrix(const std::vector<IntensityHistogram>& histograms);

/// One agglomeration step. Items are ids 0..n-1; the cluster formed by merge k
/// gets id n + k.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct ClusterAssignment {
  /// Cluster index per item, numbered 0..k-1 in order of first appearance.
  std::vector<std::size_t> labels;
  std::size_t k = 0;
  /// Complete dendrogram (n - 1 merges), whatever k is.
  std::vector<Merge> merges;
};

/// Agglomerative Ward clustering of a precomputed distance matrix using the
/// Lance-Williams update on squared distances; merge heights are the square
/// roots. Ties go to the lowest (i, j) pair. Throws ParameterError unless
/// 1 <= k <= n, ShapeError on an asymmetric or malformed matrix.
ClusterAssignment ward_cluster(const DistanceMatrix& dm, std::size_t k);

std::string to_json(const DistanceMatrix& dm, const std::vector<std::string>& names, int indent = 2);
std::string to_json(const ClusterAssignment& ca, const std::vector<std::string>& names,
                    int indent = 2);

}  // namespace hessvessel
