#pragma once

#include <array>
#include <span>
#include <vector>

#include "hessvessel/volume.hpp"

namespace hessvessel {

/// Normalized 1D Gaussian taps for offsets -r..r with r = ceil(4 sigma).
/// sigma == 0 yields the single tap {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian smoothing with border clamping. sigma is in voxels;
/// sigma == 0 returns the input unchanged. Throws ParameterError for sigma < 0.
Volume gaussian_smooth(const Volume& volume, double sigma);

/// Per-voxel symmetric Hessian, off-diagonals stored once.
struct HessianField {
  Dims dims{};
  Spacing spacing{1.0, 1.0, 1.0};
  double scale = 0.0;
  std::vector<float> xx, yy, zz, xy, xz, yz;

  std::array<double, 6> at(std::size_t i) const noexcept {
    return {xx[i], yy[i], zz[i], xy[i], xz[i], yz[i]};
  }
};

/// Gaussian smoothing at `sigma` followed by central finite differences:
/// (1, -2, 1) for pure second derivatives and the product of two
/// (-1/2, 0, 1/2) first differences for mixed ones. Neighbours outside the
/// grid are clamped to the border. Requires at least 5 voxels per axis.
HessianField hessian_field(const Volume& volume, double sigma);

/// Eigenvalues ordered by magnitude, |l1| <= |l2| <= |l3|.
struct EigenTriple {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
};

/// Closed-form (trigonometric) eigenvalues of the symmetric matrix
/// [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]. Throws NumericError on
/// non-finite input.
EigenTriple eig_sym3(double xx, double yy, double zz, double xy, double xz, double yz);

struct EigenVolumes {
  Volume l1, l2, l3;
};

/// eig_sym3 at every voxel.
EigenVolumes eig_field(const HessianField& field);

/// Maximum Frobenius norm of the Hessian over all voxels.
double max_frobenius_norm(const HessianField& field);

namespace stencil {

/// Six Hessian component maps of `in` (order xx, yy, zz, xy, xz, yz) with
/// clamped neighbours. Shared by hessian_field and the network's fixed
/// Hessian layer.
template <typename T>
void hessian(std::span<const T> in, const Dims& dims, const std::array<std::span<T>, 6>& out);

/// Adjoint of `hessian`: accumulates into `grad_in` the gradient with respect
/// to the input given gradients with respect to the six outputs.
template <typename T>
void hessian_adjoint(const std::array<std::span<const T>, 6>& grad_out, const Dims& dims,
                     std::span<T> grad_in);

}  // namespace stencil

}  // namespace hessvessel
