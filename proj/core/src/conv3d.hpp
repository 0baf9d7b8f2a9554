#pragma once

// Single-channel 3D convolution primitives on clamp-padded double grids.
// Kernels are k*k*k with taps stored as w[(dz * k + dy) * k + dx]; the output
// voxel (x, y, z) reads padded voxel (x + dx, y + dy, z + dz), i.e. the kernel
// centre sits at offset r = k / 2.

#include <algorithm>
#include <span>
#include <vector>

#include "hessvessel/volume.hpp"

namespace hessvessel::conv {

/// Dot product with four independent partial sums (fixed summation order).
inline double dot(const double* __restrict a, const double* __restrict b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline Dims padded_dims(const Dims& d, std::size_t r) {
  return {d.nx + 2 * r, d.ny + 2 * r, d.nz + 2 * r};
}

/// Copy of `in` with `r` border-replicated voxels on every face.
inline std::vector<double> pad_clamp(std::span<const double> in, const Dims& d, std::size_t r) {
  const Dims p = padded_dims(d, r);
  std::vector<double> out(p.size());
  for (std::size_t z = 0; z < p.nz; ++z) {
    const std::size_t sz = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(z) -
                                                          static_cast<std::ptrdiff_t>(r),
                                                      0, static_cast<std::ptrdiff_t>(d.nz) - 1);
    for (std::size_t y = 0; y < p.ny; ++y) {
      const std::size_t sy = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(y) -
                                                            static_cast<std::ptrdiff_t>(r),
                                                        0, static_cast<std::ptrdiff_t>(d.ny) - 1);
      const double* src = in.data() + d.index(0, sy, sz);
      double* dst = out.data() + p.index(0, y, z);
      for (std::size_t x = 0; x < r; ++x) dst[x] = src[0];
      std::copy(src, src + d.nx, dst + r);
      for (std::size_t x = 0; x < r; ++x) dst[r + d.nx + x] = src[d.nx - 1];
    }
  }
  return out;
}

/// Adjoint of pad_clamp: accumulates padded gradients onto the clamped source voxels.
inline void fold_clamp_add(std::span<const double> gpadded, const Dims& d, std::size_t r,
                           std::span<double> gin) {
  const Dims p = padded_dims(d, r);
  for (std::size_t z = 0; z < p.nz; ++z) {
    const std::size_t sz = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(z) -
                                                          static_cast<std::ptrdiff_t>(r),
                                                      0, static_cast<std::ptrdiff_t>(d.nz) - 1);
    for (std::size_t y = 0; y < p.ny; ++y) {
      const std::size_t sy = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(y) -
                                                            static_cast<std::ptrdiff_t>(r),
                                                        0, static_cast<std::ptrdiff_t>(d.ny) - 1);
      const double* src = gpadded.data() + p.index(0, y, z);
      double* dst = gin.data() + d.index(0, sy, sz);
      for (std::size_t x = 0; x < r; ++x) dst[0] += src[x];
      for (std::size_t x = 0; x < d.nx; ++x) dst[x] += src[r + x];
      for (std::size_t x = 0; x < r; ++x) dst[d.nx - 1] += src[r + d.nx + x];
    }
  }
}

/// out += conv(padded, w).
inline void conv_add(std::span<const double> padded, const Dims& d, std::size_t k,
                     std::span<const double> w, std::span<double> out) {
  const Dims p = padded_dims(d, k / 2);
  const std::size_t nx = d.nx;
  for (std::size_t z = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      double* __restrict orow = out.data() + d.index(0, y, z);
      for (std::size_t dz = 0; dz < k; ++dz) {
        for (std::size_t dy = 0; dy < k; ++dy) {
          const double* prow = padded.data() + p.index(0, y + dy, z + dz);
          const double* wrow = w.data() + (dz * k + dy) * k;
          for (std::size_t dx = 0; dx < k; ++dx) {
            const double wv = wrow[dx];
            const double* __restrict src = prow + dx;
            for (std::size_t x = 0; x < nx; ++x) orow[x] += wv * src[x];
          }
        }
      }
    }
  }
}

/// gw += d(sum(gout * conv(padded, w))) / dw.
inline void conv_weight_grad_add(std::span<const double> padded, const Dims& d, std::size_t k,
                                 std::span<const double> gout, std::span<double> gw) {
  const Dims p = padded_dims(d, k / 2);
  const std::size_t nx = d.nx;
  for (std::size_t z = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      const double* __restrict grow = gout.data() + d.index(0, y, z);
      for (std::size_t dz = 0; dz < k; ++dz) {
        for (std::size_t dy = 0; dy < k; ++dy) {
          const double* prow = padded.data() + p.index(0, y + dy, z + dz);
          double* wrow = gw.data() + (dz * k + dy) * k;
          for (std::size_t dx = 0; dx < k; ++dx) wrow[dx] += dot(grow, prow + dx, nx);
        }
      }
    }
  }
}

/// gpadded += d(sum(gout * conv(padded, w))) / dpadded.
inline void conv_input_grad_add(std::span<const double> gout, const Dims& d, std::size_t k,
                                std::span<const double> w, std::span<double> gpadded) {
  const Dims p = padded_dims(d, k / 2);
  const std::size_t nx = d.nx;
  for (std::size_t z = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      const double* __restrict grow = gout.data() + d.index(0, y, z);
      for (std::size_t dz = 0; dz < k; ++dz) {
        for (std::size_t dy = 0; dy < k; ++dy) {
          double* prow = gpadded.data() + p.index(0, y + dy, z + dz);
          const double* wrow = w.data() + (dz * k + dy) * k;
          for (std::size_t dx = 0; dx < k; ++dx) {
            const double wv = wrow[dx];
            double* __restrict dst = prow + dx;
            for (std::size_t x = 0; x < nx; ++x) dst[x] += wv * grow[x];
          }
        }
      }
    }
  }
}

}  // namespace hessvessel::conv
