#pragma once

#include <optional>
#include <vector>

#include "hessvessel/hessian.hpp"
#include "hessvessel/volume.hpp"

namespace hessvessel {

/// Sensitivities of the vesselness measure. When `gamma` is empty it is set
/// per scale to half the maximum Hessian Frobenius norm.
struct FrangiParams {
  double alpha = 0.5;
  double beta = 0.5;
  std::optional<double> gamma;
  std::vector<double> scales{1.0, 1.5, 2.0, 2.5, 3.0};
};

/// Throws ParameterError unless alpha, beta, gamma > 0 and the scales are a
/// nonempty strictly increasing list of positive values.
void validate(const FrangiParams& params);

/// Vesselness of one eigenvalue triple (|l1| <= |l2| <= |l3|), in [0, 1].
/// Exactly 0 whenever l2 >= 0 or l3 >= 0.
double vesselness(const EigenTriple& e, double alpha, double beta, double gamma);

/// Single-scale response. `gamma` empty selects the data-adaptive default.
Volume frangi_single_scale(const Volume& volume, double sigma, double alpha, double beta,
                           std::optional<double> gamma);

/// Voxelwise maximum of the single-scale responses over params.scales.
Volume frangi_vesselness(const Volume& volume, const FrangiParams& params);

/// Fixed-width intensity histogram over [lo, hi].
struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> counts;

  double bin_width() const noexcept { return (hi - lo) / static_cast<double>(counts.size()); }
  double center(std::size_t i) const noexcept {
    return lo + (static_cast<double>(i) + 0.5) * bin_width();
  }
  double edge(std::size_t k) const noexcept { return lo + static_cast<double>(k) * bin_width(); }
};

/// Histogram over [min, max] of the volume. The maximum falls in the last bin.
Histogram value_histogram(const Volume& volume, std::size_t n_bins);

/// Index k in [1, n_bins-1] of the bin edge that maximizes the between-class
/// variance w1 w2 (mu1 - mu2)^2, classes being bins [0, k) and [k, n).
/// Ties resolve to the lowest k. Throws DegenerateInputError when no edge
/// splits the histogram into two nonempty classes.
std::size_t otsu_edge(const Histogram& histogram);

/// Otsu threshold of the volume (a bin edge). Throws DegenerateInputError for
/// a constant volume and ParameterError for n_bins < 2.
double otsu_threshold(const Volume& volume, std::size_t n_bins = 256);

/// 1 where value > threshold.
BinaryMask binarize(const Volume& volume, double threshold);

}  // namespace hessvessel
