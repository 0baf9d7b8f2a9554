#include "hessvessel/hessian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hessvessel/error.hpp"

namespace hessvessel {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("Gaussian sigma must be non-negative");
  }
  if (sigma == 0.0) return {1.0};
  const auto r = static_cast<std::size_t>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(r);
    k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& w : k) w /= sum;
  return k;
}

namespace {

// One clamped 1D convolution pass along `axis` (0 = x, 1 = y, 2 = z).
void convolve_axis(const std::vector<double>& src, std::vector<double>& dst, const Dims& d,
                   std::size_t axis, const std::vector<double>& kernel) {
  const auto r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const std::size_t n = d[axis];
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? d.nx : d.nx * d.ny);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  std::vector<double> line(n);
  // Iterate over every line parallel to `axis`.
  const std::size_t outer_a = axis == 0 ? d.ny : d.nx;
  const std::size_t outer_b = axis == 2 ? d.ny : d.nz;
  for (std::size_t b = 0; b < outer_b; ++b) {
    for (std::size_t a = 0; a < outer_a; ++a) {
      std::size_t base = 0;
      if (axis == 0) base = d.index(0, a, b);
      else if (axis == 1) base = d.index(a, 0, b);
      else base = d.index(a, b, 0);
      for (std::size_t i = 0; i < n; ++i) line[i] = src[base + i * stride];
      for (std::ptrdiff_t i = 0; i <= last; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -r; k <= r; ++k) {
          const std::ptrdiff_t j = std::clamp(i + k, std::ptrdiff_t{0}, last);
          acc += kernel[static_cast<std::size_t>(k + r)] * line[static_cast<std::size_t>(j)];
        }
        dst[base + static_cast<std::size_t>(i) * stride] = acc;
      }
    }
  }
}

std::vector<double> smooth_to_double(const Volume& volume, double sigma) {
  std::vector<double> a(volume.data().begin(), volume.data().end());
  if (sigma == 0.0) return a;
  const auto kernel = gaussian_kernel(sigma);
  std::vector<double> b(a.size());
  convolve_axis(a, b, volume.dims(), 0, kernel);
  convolve_axis(b, a, volume.dims(), 1, kernel);
  convolve_axis(a, b, volume.dims(), 2, kernel);
  return b;
}

}  // namespace

Volume gaussian_smooth(const Volume& volume, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  if (sigma == 0.0) return volume;
  const auto smoothed = smooth_to_double(volume, sigma);
  Volume out(volume.dims(), volume.spacing());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(smoothed[i]);
  return out;
}

namespace stencil {

namespace {

// Clamped neighbour offsets along each axis for one voxel coordinate.
struct Neighbours {
  std::size_t minus;
  std::size_t plus;
};

inline Neighbours clamp_pair(std::size_t i, std::size_t n) {
  return {i == 0 ? 0 : i - 1, i + 1 >= n ? n - 1 : i + 1};
}

// Visits every voxel with the 18 indices the stencils touch.
template <typename Fn>
void for_each_stencil(const Dims& d, Fn&& fn) {
  for (std::size_t z = 0; z < d.nz; ++z) {
    const auto [zm, zp] = clamp_pair(z, d.nz);
    for (std::size_t y = 0; y < d.ny; ++y) {
      const auto [ym, yp] = clamp_pair(y, d.ny);
      for (std::size_t x = 0; x < d.nx; ++x) {
        const auto [xm, xp] = clamp_pair(x, d.nx);
        fn(d.index(x, y, z), d.index(xm, y, z), d.index(xp, y, z), d.index(x, ym, z),
           d.index(x, yp, z), d.index(x, y, zm), d.index(x, y, zp), d.index(xp, yp, z),
           d.index(xp, ym, z), d.index(xm, yp, z), d.index(xm, ym, z), d.index(xp, y, zp),
           d.index(xp, y, zm), d.index(xm, y, zp), d.index(xm, y, zm), d.index(x, yp, zp),
           d.index(x, yp, zm), d.index(x, ym, zp), d.index(x, ym, zm));
      }
    }
  }
}

}  // namespace

template <typename T>
void hessian(std::span<const T> in, const Dims& dims, const std::array<std::span<T>, 6>& out) {
  const T two = T(2);
  const T quarter = T(0.25);
  for_each_stencil(dims, [&](std::size_t c, std::size_t xm, std::size_t xp, std::size_t ym,
                             std::size_t yp, std::size_t zm, std::size_t zp, std::size_t pp_xy,
                             std::size_t pm_xy, std::size_t mp_xy, std::size_t mm_xy,
                             std::size_t pp_xz, std::size_t pm_xz, std::size_t mp_xz,
                             std::size_t mm_xz, std::size_t pp_yz, std::size_t pm_yz,
                             std::size_t mp_yz, std::size_t mm_yz) {
    out[0][c] = in[xp] - two * in[c] + in[xm];
    out[1][c] = in[yp] - two * in[c] + in[ym];
    out[2][c] = in[zp] - two * in[c] + in[zm];
    out[3][c] = quarter * (in[pp_xy] - in[pm_xy] - in[mp_xy] + in[mm_xy]);
    out[4][c] = quarter * (in[pp_xz] - in[pm_xz] - in[mp_xz] + in[mm_xz]);
    out[5][c] = quarter * (in[pp_yz] - in[pm_yz] - in[mp_yz] + in[mm_yz]);
  });
}

template <typename T>
void hessian_adjoint(const std::array<std::span<const T>, 6>& g, const Dims& dims,
                     std::span<T> grad_in) {
  const T two = T(2);
  const T quarter = T(0.25);
  for_each_stencil(dims, [&](std::size_t c, std::size_t xm, std::size_t xp, std::size_t ym,
                             std::size_t yp, std::size_t zm, std::size_t zp, std::size_t pp_xy,
                             std::size_t pm_xy, std::size_t mp_xy, std::size_t mm_xy,
                             std::size_t pp_xz, std::size_t pm_xz, std::size_t mp_xz,
                             std::size_t mm_xz, std::size_t pp_yz, std::size_t pm_yz,
                             std::size_t mp_yz, std::size_t mm_yz) {
    const T gxx = g[0][c], gyy = g[1][c], gzz = g[2][c];
    grad_in[xp] += gxx;
    grad_in[xm] += gxx;
    grad_in[yp] += gyy;
    grad_in[ym] += gyy;
    grad_in[zp] += gzz;
    grad_in[zm] += gzz;
    grad_in[c] -= two * (gxx + gyy + gzz);
    const T gxy = quarter * g[3][c];
    grad_in[pp_xy] += gxy;
    grad_in[pm_xy] -= gxy;
    grad_in[mp_xy] -= gxy;
    grad_in[mm_xy] += gxy;
    const T gxz = quarter * g[4][c];
    grad_in[pp_xz] += gxz;
    grad_in[pm_xz] -= gxz;
    grad_in[mp_xz] -= gxz;
    grad_in[mm_xz] += gxz;
    const T gyz = quarter * g[5][c];
    grad_in[pp_yz] += gyz;
    grad_in[pm_yz] -= gyz;
    grad_in[mp_yz] -= gyz;
    grad_in[mm_yz] += gyz;
  });
}

template void hessian<float>(std::span<const float>, const Dims&,
                             const std::array<std::span<float>, 6>&);
template void hessian<double>(std::span<const double>, const Dims&,
                              const std::array<std::span<double>, 6>&);
template void hessian_adjoint<float>(const std::array<std::span<const float>, 6>&, const Dims&,
                                     std::span<float>);
template void hessian_adjoint<double>(const std::array<std::span<const double>, 6>&, const Dims&,
                                      std::span<double>);

}  // namespace stencil

HessianField hessian_field(const Volume& volume, double sigma) {
  const Dims& d = volume.dims();
  if (d.nx < 5 || d.ny < 5 || d.nz < 5) {
    throw ShapeError("hessian_field needs at least 5 voxels per axis");
  }
  const auto smoothed = smooth_to_double(volume, sigma);
  std::array<std::vector<double>, 6> comps;
  for (auto& c : comps) c.resize(d.size());
  stencil::hessian<double>(smoothed, d,
                           {std::span<double>(comps[0]), std::span<double>(comps[1]),
                            std::span<double>(comps[2]), std::span<double>(comps[3]),
                            std::span<double>(comps[4]), std::span<double>(comps[5])});
  HessianField field;
  field.dims = d;
  field.spacing = volume.spacing();
  field.scale = sigma;
  auto to_float = [](const std::vector<double>& v) {
    return std::vector<float>(v.begin(), v.end());
  };
  field.xx = to_float(comps[0]);
  field.yy = to_float(comps[1]);
  field.zz = to_float(comps[2]);
  field.xy = to_float(comps[3]);
  field.xz = to_float(comps[4]);
  field.yz = to_float(comps[5]);
  return field;
}

EigenTriple eig_sym3(double xx, double yy, double zz, double xy, double xz, double yz) {
  for (double v : {xx, yy, zz, xy, xz, yz}) {
    if (!std::isfinite(v)) throw NumericError("eig_sym3: non-finite matrix entry");
  }
  // Scale to unit max-entry to keep the cubic's coefficients in range.
  const double scale =
      std::max({std::fabs(xx), std::fabs(yy), std::fabs(zz), std::fabs(xy), std::fabs(xz),
                std::fabs(yz)});
  if (scale == 0.0) return {0.0, 0.0, 0.0};
  const double inv = 1.0 / scale;
  double a = xx * inv, b = yy * inv, c = zz * inv;
  const double d = xy * inv, e = xz * inv, f = yz * inv;

  // Shift to the traceless part K = A - mI.
  const double m = (a + b + c) / 3.0;
  a -= m;
  b -= m;
  c -= m;
  const double off2 = d * d + e * e + f * f;
  const double p = (a * a + b * b + c * c + 2.0 * off2) / 6.0;

  std::array<double, 3> roots{};
  if (p <= 0.0) {
    roots = {0.0, 0.0, 0.0};
  } else {
    const double det_k = a * (b * c - f * f) - d * (d * c - f * e) + e * (d * f - b * e);
    const double sp = std::sqrt(p);
    // Clamping the cosine argument covers (near-)repeated roots.
    const double r = std::clamp(det_k / (2.0 * p * sp), -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    constexpr double kTwoThirdsPi = 2.0 * std::numbers::pi / 3.0;
    roots = {2.0 * sp * std::cos(phi), 2.0 * sp * std::cos(phi + kTwoThirdsPi),
             2.0 * sp * std::cos(phi + 2.0 * kTwoThirdsPi)};

    // One guarded Newton step on det(K - x I) = -(x^3 - 3 p x - det K).
    for (double& x : roots) {
      const double fx = x * x * x - 3.0 * p * x - det_k;
      const double dfx = 3.0 * x * x - 3.0 * p;
      if (dfx == 0.0) continue;
      const double xn = x - fx / dfx;
      const double fn = xn * xn * xn - 3.0 * p * xn - det_k;
      if (std::isfinite(xn) && std::fabs(fn) < std::fabs(fx)) x = xn;
    }
  }
  for (double& x : roots) x = (x + m) * scale;
  std::sort(roots.begin(), roots.end(), [](double u, double v) {
    const double au = std::fabs(u), av = std::fabs(v);
    return au != av ? au < av : u < v;
  });
  return {roots[0], roots[1], roots[2]};
}

EigenVolumes eig_field(const HessianField& field) {
  EigenVolumes out{Volume(field.dims, field.spacing), Volume(field.dims, field.spacing),
                   Volume(field.dims, field.spacing)};
  const std::size_t n = field.dims.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = eig_sym3(field.xx[i], field.yy[i], field.zz[i], field.xy[i], field.xz[i],
                            field.yz[i]);
    out.l1[i] = static_cast<float>(e.l1);
    out.l2[i] = static_cast<float>(e.l2);
    out.l3[i] = static_cast<float>(e.l3);
  }
  return out;
}

double max_frobenius_norm(const HessianField& field) {
  double best = 0.0;
  for (std::size_t i = 0; i < field.dims.size(); ++i) {
    const double s = double(field.xx[i]) * field.xx[i] + double(field.yy[i]) * field.yy[i] +
                     double(field.zz[i]) * field.zz[i] +
                     2.0 * (double(field.xy[i]) * field.xy[i] + double(field.xz[i]) * field.xz[i] +
                            double(field.yz[i]) * field.yz[i]);
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

}  // namespace hessvessel
