#include "hessvessel/augment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hessvessel/error.hpp"
#include "hessvessel/rng.hpp"

namespace hessvessel {

Volume apply_gamma(const Volume& volume, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be positive");
  const auto [lo_it, hi_it] = std::minmax_element(volume.data().begin(), volume.data().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return volume;
  const double range = hi - lo;
  Volume out(volume.dims(), volume.spacing());
  for (std::size_t i = 0; i < volume.size(); ++i) {
    const double unit = std::clamp((volume[i] - lo) / range, 0.0, 1.0);
    out[i] = static_cast<float>(std::pow(unit, gamma) * range + lo);
  }
  return out;
}

Volume random_gamma(const Volume& volume, GammaRange log_gamma_range, std::uint64_t seed) {
  if (log_gamma_range.lo > log_gamma_range.hi) {
    throw ParameterError("log-gamma range must satisfy lo <= hi");
  }
  Rng rng(seed);
  double u = log_gamma_range.lo;
  if (log_gamma_range.hi > log_gamma_range.lo) {
    u = std::uniform_real_distribution<double>(log_gamma_range.lo, log_gamma_range.hi)(rng);
  }
  return apply_gamma(volume, std::exp(u));
}

namespace {

// Control-grid coordinate of voxel index `i` along an axis of `n` voxels.
struct AxisWeights {
  std::vector<std::size_t> lo;
  std::vector<double> t;
};

AxisWeights axis_weights(std::size_t n, std::size_t c) {
  AxisWeights w;
  w.lo.resize(n);
  w.t.resize(n);
  const double scale = n > 1 ? static_cast<double>(c - 1) / static_cast<double>(n - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) * scale;
    std::size_t k = std::min(static_cast<std::size_t>(u), c - 2);
    w.lo[i] = k;
    w.t[i] = u - static_cast<double>(k);
  }
  return w;
}

double sample_trilinear(const Volume& v, double x, double y, double z) {
  const Dims& d = v.dims();
  x = std::clamp(x, 0.0, static_cast<double>(d.nx - 1));
  y = std::clamp(y, 0.0, static_cast<double>(d.ny - 1));
  z = std::clamp(z, 0.0, static_cast<double>(d.nz - 1));
  const auto x0 = static_cast<std::size_t>(x);
  const auto y0 = static_cast<std::size_t>(y);
  const auto z0 = static_cast<std::size_t>(z);
  const std::size_t x1 = std::min(x0 + 1, d.nx - 1);
  const std::size_t y1 = std::min(y0 + 1, d.ny - 1);
  const std::size_t z1 = std::min(z0 + 1, d.nz - 1);
  const double tx = x - static_cast<double>(x0);
  const double ty = y - static_cast<double>(y0);
  const double tz = z - static_cast<double>(z0);
  auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
  const double c00 = lerp(v(x0, y0, z0), v(x1, y0, z0), tx);
  const double c10 = lerp(v(x0, y1, z0), v(x1, y1, z0), tx);
  const double c01 = lerp(v(x0, y0, z1), v(x1, y0, z1), tx);
  const double c11 = lerp(v(x0, y1, z1), v(x1, y1, z1), tx);
  return lerp(lerp(c00, c10, ty), lerp(c01, c11, ty), tz);
}

std::size_t nearest_index(double x, std::size_t n) {
  const double r = std::round(std::clamp(x, 0.0, static_cast<double>(n - 1)));
  return static_cast<std::size_t>(r);
}

}  // namespace

ElasticResult elastic_deform(const Volume& volume, const std::optional<BinaryMask>& companion_mask,
                             const ElasticParams& params, std::uint64_t seed) {
  const auto& cg = params.control_grid;
  if (cg[0] < 2 || cg[1] < 2 || cg[2] < 2) {
    throw ParameterError("elastic control grid needs at least 2 points per axis");
  }
  if (!(params.max_displacement_voxels >= 0.0) || !std::isfinite(params.max_displacement_voxels)) {
    throw ParameterError("maximum displacement must be non-negative");
  }
  if (companion_mask) require_same_dims(volume.dims(), companion_mask->dims(), "elastic_deform");

  const Dims& d = volume.dims();
  const std::size_t n_ctrl = cg[0] * cg[1] * cg[2];
  std::vector<std::array<double, 3>> ctrl(n_ctrl, {0.0, 0.0, 0.0});
  if (params.max_displacement_voxels > 0.0) {
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(-params.max_displacement_voxels,
                                                params.max_displacement_voxels);
    for (auto& c : ctrl) {
      for (double& comp : c) comp = dist(rng);
    }
  }
  auto ctrl_at = [&](std::size_t i, std::size_t j, std::size_t k) -> const std::array<double, 3>& {
    return ctrl[i + cg[0] * (j + cg[1] * k)];
  };

  const AxisWeights wx = axis_weights(d.nx, cg[0]);
  const AxisWeights wy = axis_weights(d.ny, cg[1]);
  const AxisWeights wz = axis_weights(d.nz, cg[2]);

  ElasticResult result{Volume(d, volume.spacing()), std::nullopt};
  if (companion_mask) result.mask.emplace(d);

  for (std::size_t z = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      for (std::size_t x = 0; x < d.nx; ++x) {
        std::array<double, 3> disp{0.0, 0.0, 0.0};
        const std::size_t i0 = wx.lo[x], j0 = wy.lo[y], k0 = wz.lo[z];
        const double tx = wx.t[x], ty = wy.t[y], tz = wz.t[z];
        for (int dk = 0; dk < 2; ++dk) {
          const double fz = dk ? tz : 1.0 - tz;
          for (int dj = 0; dj < 2; ++dj) {
            const double fy = dj ? ty : 1.0 - ty;
            for (int di = 0; di < 2; ++di) {
              const double f = (di ? tx : 1.0 - tx) * fy * fz;
              if (f == 0.0) continue;
              const auto& c = ctrl_at(i0 + di, j0 + dj, k0 + dk);
              disp[0] += f * c[0];
              disp[1] += f * c[1];
              disp[2] += f * c[2];
            }
          }
        }
        const double sx = static_cast<double>(x) + disp[0];
        const double sy = static_cast<double>(y) + disp[1];
        const double sz = static_cast<double>(z) + disp[2];
        result.volume(x, y, z) = static_cast<float>(sample_trilinear(volume, sx, sy, sz));
        if (companion_mask) {
          const std::uint8_t m = (*companion_mask)(nearest_index(sx, d.nx), nearest_index(sy, d.ny),
                                                   nearest_index(sz, d.nz));
          result.mask->set(x, y, z, m >= 1);
        }
      }
    }
  }
  return result;
}

}  // namespace hessvessel
