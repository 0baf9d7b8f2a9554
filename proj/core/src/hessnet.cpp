#include "hessvessel/hessnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "conv3d.hpp"
#include "hessvessel/error.hpp"
#include "hessvessel/hessian.hpp"
#include "hessvessel/rng.hpp"

namespace hessvessel {

namespace {

constexpr std::size_t kHessianComponents = 6;

std::size_t cube(std::size_t k) { return k * k * k; }

// MLP layer widths for one channel: 6, hidden..., 1.
std::vector<std::size_t> mlp_widths(const HessNetConfig& config) {
  std::vector<std::size_t> w{kHessianComponents};
  w.insert(w.end(), config.mlp_hidden.begin(), config.mlp_hidden.end());
  w.push_back(1);
  return w;
}

std::string block_name(std::size_t b) { return "block" + std::to_string(b); }

}  // namespace

void validate(const HessNetConfig& config) {
  if (config.n_blocks == 0) throw ParameterError("HessNet needs at least one feature block");
  if (config.proj_channels == 0 || config.head_channels == 0) {
    throw ParameterError("HessNet channel counts must be positive");
  }
  for (std::size_t h : config.mlp_hidden) {
    if (h == 0) throw ParameterError("HessNet MLP widths must be positive");
  }
  if (config.proj_kernel % 2 == 0 || config.head_kernel % 2 == 0) {
    throw ParameterError("HessNet kernel sizes must be odd");
  }
}

std::size_t param_count(const HessNetConfig& config) {
  validate(config);
  const auto widths = mlp_widths(config);
  std::size_t mlp = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) mlp += widths[l] * widths[l + 1] + widths[l + 1];
  const std::size_t block = config.proj_channels * (cube(config.proj_kernel) + 1) +
                            config.proj_channels * mlp;
  const std::size_t kh = cube(config.head_kernel);
  const std::size_t head = config.head_channels * ((config.n_blocks + 1) * kh + 1) +
                           (config.head_channels * kh + 1);
  return config.n_blocks * block + head;
}

std::vector<ParamEntry> make_layout(const HessNetConfig& config) {
  validate(config);
  std::vector<ParamEntry> layout;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape, std::size_t fan_in, bool bias) {
    std::size_t size = 1;
    for (std::size_t s : shape) size *= s;
    layout.push_back({std::move(name), std::move(shape), offset, size, fan_in, bias});
    offset += size;
  };
  const std::size_t kp = config.proj_kernel;
  const std::size_t kh = config.head_kernel;
  const std::size_t c = config.proj_channels;
  const auto widths = mlp_widths(config);
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    const std::string pre = block_name(b);
    add(pre + ".proj.weight", {c, kp, kp, kp}, cube(kp), false);
    add(pre + ".proj.bias", {c}, cube(kp), true);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      const std::string layer = pre + ".mlp" + std::to_string(l);
      add(layer + ".weight", {c, widths[l + 1], widths[l]}, widths[l], false);
      add(layer + ".bias", {c, widths[l + 1]}, widths[l], true);
    }
  }
  const std::size_t in = config.n_blocks + 1;
  add("head.conv0.weight", {config.head_channels, in, kh, kh, kh}, in * cube(kh), false);
  add("head.conv0.bias", {config.head_channels}, in * cube(kh), true);
  add("head.conv1.weight", {1, config.head_channels, kh, kh, kh}, config.head_channels * cube(kh),
      false);
  add("head.conv1.bias", {1}, config.head_channels * cube(kh), true);
  return layout;
}

ParamStore::ParamStore(const HessNetConfig& config) : layout_(make_layout(config)) {
  std::size_t total = 0;
  for (const auto& e : layout_) total += e.size;
  values_.assign(total, 0.0);
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
  for (const auto& e : layout_) {
    if (e.name == name) return e;
  }
  throw ParameterError("unknown parameter tensor '" + name + "'");
}

std::span<double> ParamStore::tensor(const std::string& name) {
  const auto& e = entry(name);
  return std::span<double>(values_).subspan(e.offset, e.size);
}

std::span<const double> ParamStore::tensor(const std::string& name) const {
  const auto& e = entry(name);
  return std::span<const double>(values_).subspan(e.offset, e.size);
}

void ParamStore::check_finite() const {
  for (const auto& e : layout_) {
    for (std::size_t i = 0; i < e.size; ++i) {
      if (!std::isfinite(values_[e.offset + i])) {
        throw NumericError("non-finite value in parameter tensor '" + e.name + "'");
      }
    }
  }
}

ParamStore init_params(const HessNetConfig& config, std::uint64_t seed) {
  ParamStore store(config);
  Rng rng(derive_seed(seed, SeedStage::kInit));
  auto values = store.values();
  for (const auto& e : store.layout()) {
    if (e.is_bias) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(e.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < e.size; ++i) values[e.offset + i] = dist(rng);
  }
  return store;
}

namespace net {

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t receptive_radius(const HessNetConfig& config) {
  return config.proj_kernel / 2 + 1 + 2 * (config.head_kernel / 2);
}

namespace {

// Resolved tensor views for one pass.
struct Views {
  struct Block {
    std::span<const double> proj_w, proj_b;
    std::vector<std::span<const double>> mlp_w, mlp_b;
  };
  std::vector<Block> blocks;
  std::span<const double> head0_w, head0_b, head1_w, head1_b;
};

Views resolve(const ParamStore& params, const HessNetConfig& config) {
  Views v;
  const std::size_t layers = config.mlp_hidden.size() + 1;
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    Views::Block blk;
    const std::string pre = block_name(b);
    blk.proj_w = params.tensor(pre + ".proj.weight");
    blk.proj_b = params.tensor(pre + ".proj.bias");
    for (std::size_t l = 0; l < layers; ++l) {
      blk.mlp_w.push_back(params.tensor(pre + ".mlp" + std::to_string(l) + ".weight"));
      blk.mlp_b.push_back(params.tensor(pre + ".mlp" + std::to_string(l) + ".bias"));
    }
    v.blocks.push_back(std::move(blk));
  }
  v.head0_w = params.tensor("head.conv0.weight");
  v.head0_b = params.tensor("head.conv0.bias");
  v.head1_w = params.tensor("head.conv1.weight");
  v.head1_b = params.tensor("head.conv1.bias");
  return v;
}

void check_dims(const HessNetConfig& config, const Dims& d) {
  const std::size_t need = std::max(config.proj_kernel, config.head_kernel);
  if (d.nx < need || d.ny < need || d.nz < need) {
    throw ShapeError("HessNet input must be at least " + std::to_string(need) +
                     " voxels along every axis");
  }
}

// Per-voxel dense layer over planar maps: out[o] = b[o] + sum_i W[o][i] * in[i].
void dense_layer(std::span<const std::vector<double>> in, std::span<const double> w,
                 std::span<const double> b, std::size_t n_in, std::size_t n_out,
                 std::vector<std::vector<double>>& out) {
  const std::size_t n = in.front().size();
  out.resize(n_out);
  for (std::size_t o = 0; o < n_out; ++o) {
    out[o].assign(n, b[o]);
    double* __restrict dst = out[o].data();
    for (std::size_t i = 0; i < n_in; ++i) {
      const double wv = w[o * n_in + i];
      const double* __restrict src = in[i].data();
      for (std::size_t v = 0; v < n; ++v) dst[v] += wv * src[v];
    }
  }
}

// tanh through a single exp; absolute error stays at the 1e-16 level.
inline double tanh_exp(double x) {
  const double t = std::exp(-2.0 * std::fabs(x));
  return std::copysign((1.0 - t) / (1.0 + t), x);
}

void tanh_inplace(std::vector<double>& a) {
  for (double& x : a) x = tanh_exp(x);
}

}  // namespace

void forward_logits(const ParamStore& params, const HessNetConfig& config,
                    std::span<const double> input, const Dims& dims, std::span<double> logits,
                    ForwardCache* cache) {
  validate(config);
  check_dims(config, dims);
  if (input.size() != dims.size() || logits.size() != dims.size()) {
    throw ShapeError("forward_logits: buffer lengths do not match dims");
  }
  params.check_finite();
  const Views v = resolve(params, config);
  const std::size_t n = dims.size();
  const std::size_t kp = config.proj_kernel, kh = config.head_kernel;
  const std::size_t rp = kp / 2, rh = kh / 2;
  const std::size_t C = config.proj_channels;
  const auto widths = mlp_widths(config);
  const std::size_t layers = widths.size() - 1;
  const std::size_t kp3 = cube(kp), kh3 = cube(kh);

  std::vector<double> xp = conv::pad_clamp(input, dims, rp);
  std::vector<std::vector<double>> features(config.n_blocks + 1);
  features[0].assign(input.begin(), input.end());

  if (cache) {
    cache->dims = dims;
    cache->hessian.assign(config.n_blocks, {});
    cache->hidden.assign(config.n_blocks, {});
  }

  std::size_t hidden_total = 0;
  for (std::size_t l = 1; l < layers; ++l) hidden_total += widths[l];

  std::vector<double> proj(n);
  std::vector<std::vector<double>> acts, next;
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    const auto& blk = v.blocks[b];
    std::vector<double> block_out(n, 0.0);
    if (cache) {
      cache->hessian[b].resize(C);
      cache->hidden[b].resize(C);
    }
    for (std::size_t c = 0; c < C; ++c) {
      std::fill(proj.begin(), proj.end(), blk.proj_b[c]);
      conv::conv_add(xp, dims, kp, blk.proj_w.subspan(c * kp3, kp3), proj);

      auto& hess = cache ? cache->hessian[b][c] : acts;
      hess.assign(kHessianComponents, std::vector<double>(n));
      stencil::hessian<double>(proj, dims,
                               {std::span<double>(hess[0]), std::span<double>(hess[1]),
                                std::span<double>(hess[2]), std::span<double>(hess[3]),
                                std::span<double>(hess[4]), std::span<double>(hess[5])});
      std::span<const std::vector<double>> cur(hess);
      if (cache) {
        cache->hidden[b][c].clear();
        cache->hidden[b][c].reserve(hidden_total);
      }
      for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t n_in = widths[l], n_out = widths[l + 1];
        dense_layer(cur, blk.mlp_w[l].subspan(c * n_out * n_in, n_out * n_in),
                    blk.mlp_b[l].subspan(c * n_out, n_out), n_in, n_out, next);
        if (l + 1 < layers) {
          for (auto& map : next) tanh_inplace(map);
          if (cache) {
            auto& hid = cache->hidden[b][c];
            const std::size_t base = hid.size();
            for (auto& map : next) hid.push_back(std::move(map));
            cur = std::span<const std::vector<double>>(hid).subspan(base, n_out);
            continue;
          }
        }
        std::swap(acts, next);
        cur = acts;
      }
      const double* m = cur[0].data();
      for (std::size_t i = 0; i < n; ++i) block_out[i] += m[i];
    }
    const double inv_c = 1.0 / static_cast<double>(C);
    for (double& x : block_out) x *= inv_c;
    features[b + 1] = std::move(block_out);
  }

  const std::size_t in_ch = config.n_blocks + 1;
  std::vector<std::vector<double>> fpad(in_ch);
  for (std::size_t c = 0; c < in_ch; ++c) fpad[c] = conv::pad_clamp(features[c], dims, rh);

  std::vector<std::vector<double>> hidden(config.head_channels, std::vector<double>(n));
  std::vector<std::vector<double>> hpad(config.head_channels);
  for (std::size_t j = 0; j < config.head_channels; ++j) {
    std::fill(hidden[j].begin(), hidden[j].end(), v.head0_b[j]);
    for (std::size_t c = 0; c < in_ch; ++c) {
      conv::conv_add(fpad[c], dims, kh, v.head0_w.subspan((j * in_ch + c) * kh3, kh3), hidden[j]);
    }
    tanh_inplace(hidden[j]);
    hpad[j] = conv::pad_clamp(hidden[j], dims, rh);
  }

  std::fill(logits.begin(), logits.end(), v.head1_b[0]);
  for (std::size_t j = 0; j < config.head_channels; ++j) {
    conv::conv_add(hpad[j], dims, kh, v.head1_w.subspan(j * kh3, kh3), logits);
  }

  if (cache) {
    cache->input_padded = std::move(xp);
    cache->features_padded = std::move(fpad);
    cache->head_hidden_padded = std::move(hpad);
    cache->head_hidden.clear();
    for (const auto& h : hidden) cache->head_hidden.insert(cache->head_hidden.end(), h.begin(), h.end());
  }
}

std::vector<double> backprop(const ParamStore& params, const HessNetConfig& config,
                             const ForwardCache& cache, std::span<const double> grad_logits) {
  const Dims& dims = cache.dims;
  const std::size_t n = dims.size();
  if (grad_logits.size() != n) throw ShapeError("backprop: gradient length does not match cache");
  const Views v = resolve(params, config);
  const std::size_t kp = config.proj_kernel, kh = config.head_kernel;
  const std::size_t rh = kh / 2;
  const std::size_t C = config.proj_channels;
  const std::size_t in_ch = config.n_blocks + 1;
  const std::size_t kp3 = cube(kp), kh3 = cube(kh);
  const auto widths = mlp_widths(config);
  const std::size_t layers = widths.size() - 1;

  std::vector<double> grad(params.size(), 0.0);
  auto gslice = [&](const std::string& name) {
    const auto& e = params.entry(name);
    return std::span<double>(grad).subspan(e.offset, e.size);
  };

  // Output convolution.
  auto g_head1_w = gslice("head.conv1.weight");
  auto g_head1_b = gslice("head.conv1.bias");
  for (double g : grad_logits) g_head1_b[0] += g;
  const Dims pdims_h = conv::padded_dims(dims, rh);
  std::vector<double> gpad(pdims_h.size());
  std::vector<std::vector<double>> g_pre(config.head_channels, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < config.head_channels; ++j) {
    conv::conv_weight_grad_add(cache.head_hidden_padded[j], dims, kh, grad_logits,
                               g_head1_w.subspan(j * kh3, kh3));
    std::fill(gpad.begin(), gpad.end(), 0.0);
    conv::conv_input_grad_add(grad_logits, dims, kh, v.head1_w.subspan(j * kh3, kh3), gpad);
    conv::fold_clamp_add(gpad, dims, rh, g_pre[j]);
    const double* a = cache.head_hidden.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) g_pre[j][i] *= 1.0 - a[i] * a[i];
  }

  // Fusion convolution; the skip channel (c = 0) needs no input gradient.
  auto g_head0_w = gslice("head.conv0.weight");
  auto g_head0_b = gslice("head.conv0.bias");
  std::vector<std::vector<double>> g_feat_pad(in_ch, std::vector<double>(pdims_h.size(), 0.0));
  for (std::size_t j = 0; j < config.head_channels; ++j) {
    for (double g : g_pre[j]) g_head0_b[j] += g;
    for (std::size_t c = 0; c < in_ch; ++c) {
      const std::size_t off = (j * in_ch + c) * kh3;
      conv::conv_weight_grad_add(cache.features_padded[c], dims, kh, g_pre[j],
                                 g_head0_w.subspan(off, kh3));
      if (c > 0) conv::conv_input_grad_add(g_pre[j], dims, kh, v.head0_w.subspan(off, kh3), g_feat_pad[c]);
    }
  }

  std::vector<double> g_block(n), g_proj(n);
  std::vector<std::vector<double>> g_act, g_next;
  for (std::size_t b = 0; b < config.n_blocks; ++b) {
    std::fill(g_block.begin(), g_block.end(), 0.0);
    conv::fold_clamp_add(g_feat_pad[b + 1], dims, rh, g_block);
    const double inv_c = 1.0 / static_cast<double>(C);
    for (double& g : g_block) g *= inv_c;

    const std::string pre = block_name(b);
    auto g_proj_w = gslice(pre + ".proj.weight");
    auto g_proj_b = gslice(pre + ".proj.bias");
    const auto& blk = v.blocks[b];

    for (std::size_t c = 0; c < C; ++c) {
      const auto& hess = cache.hessian[b][c];
      const auto& hid = cache.hidden[b][c];
      // Gradient w.r.t. the MLP output map.
      g_act.assign(1, g_block);
      for (std::size_t l = layers; l-- > 0;) {
        const std::size_t n_in = widths[l], n_out = widths[l + 1];
        auto g_w = gslice(pre + ".mlp" + std::to_string(l) + ".weight").subspan(c * n_out * n_in, n_out * n_in);
        auto g_b = gslice(pre + ".mlp" + std::to_string(l) + ".bias").subspan(c * n_out, n_out);
        const auto w = blk.mlp_w[l].subspan(c * n_out * n_in, n_out * n_in);
        // Layer input activations: Hessian maps for l == 0, else hidden units.
        auto input_map = [&](std::size_t i) -> const std::vector<double>& {
          if (l == 0) return hess[i];
          std::size_t base = 0;
          for (std::size_t q = 1; q < l; ++q) base += widths[q];
          return hid[base + i];
        };
        for (std::size_t o = 0; o < n_out; ++o) {
          const double* __restrict go = g_act[o].data();
          double sb = 0.0;
          for (std::size_t i2 = 0; i2 < n; ++i2) sb += go[i2];
          g_b[o] += sb;
          for (std::size_t i = 0; i < n_in; ++i) {
            g_w[o * n_in + i] += conv::dot(go, input_map(i).data(), n);
          }
        }
        g_next.assign(n_in, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n_in; ++i) {
          double* __restrict gi = g_next[i].data();
          for (std::size_t o = 0; o < n_out; ++o) {
            const double wv = w[o * n_in + i];
            const double* __restrict go = g_act[o].data();
            for (std::size_t i2 = 0; i2 < n; ++i2) gi[i2] += wv * go[i2];
          }
          if (l > 0) {
            const double* __restrict a = input_map(i).data();
            for (std::size_t i2 = 0; i2 < n; ++i2) gi[i2] *= 1.0 - a[i2] * a[i2];
          }
        }
        std::swap(g_act, g_next);
      }
      // g_act now holds gradients w.r.t. the six Hessian maps.
      std::fill(g_proj.begin(), g_proj.end(), 0.0);
      stencil::hessian_adjoint<double>(
          {std::span<const double>(g_act[0]), std::span<const double>(g_act[1]),
           std::span<const double>(g_act[2]), std::span<const double>(g_act[3]),
           std::span<const double>(g_act[4]), std::span<const double>(g_act[5])},
          dims, g_proj);
      double sb = 0.0;
      for (double g : g_proj) sb += g;
      g_proj_b[c] += sb;
      conv::conv_weight_grad_add(cache.input_padded, dims, kp, g_proj, g_proj_w.subspan(c * kp3, kp3));
    }
  }

  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      for (const auto& e : params.layout()) {
        if (i >= e.offset && i < e.offset + e.size) {
          throw NumericError("non-finite gradient in layer '" + e.name + "'");
        }
      }
    }
  }
  return grad;
}

}  // namespace net

Volume forward(const ParamStore& params, const HessNetConfig& config, const Volume& volume) {
  validate(config);
  const Dims& d = volume.dims();
  if (d.nx < std::max(config.proj_kernel, config.head_kernel) ||
      d.ny < std::max(config.proj_kernel, config.head_kernel) ||
      d.nz < std::max(config.proj_kernel, config.head_kernel)) {
    throw ShapeError("HessNet input is smaller than its kernels");
  }
  params.check_finite();
  if (params.layout() != make_layout(config)) {
    throw ParameterError("parameter layout does not match the network configuration");
  }

  Volume out(d, volume.spacing());
  const float lo = std::nextafter(0.0f, 1.0f);
  const float hi = std::nextafter(1.0f, 0.0f);

  // Large inputs are processed in tiles with a halo of the receptive radius;
  // every interior voxel sees exactly the values of a whole-volume pass.
  constexpr std::size_t kTile = 64;
  const std::size_t halo = net::receptive_radius(config);
  auto axis_tiles = [&](std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> t;
    if (n <= kTile + 2 * halo) {
      t.emplace_back(0, n);
      return t;
    }
    const std::size_t count = (n + kTile - 1) / kTile;
    for (std::size_t i = 0; i < count; ++i) t.emplace_back(i * n / count, (i + 1) * n / count);
    return t;
  };
  const auto tx = axis_tiles(d.nx), ty = axis_tiles(d.ny), tz = axis_tiles(d.nz);

  std::vector<double> in, logits;
  for (const auto& [z0, z1] : tz) {
    for (const auto& [y0, y1] : ty) {
      for (const auto& [x0, x1] : tx) {
        const std::size_t ex0 = x0 > halo ? x0 - halo : 0, ex1 = std::min(d.nx, x1 + halo);
        const std::size_t ey0 = y0 > halo ? y0 - halo : 0, ey1 = std::min(d.ny, y1 + halo);
        const std::size_t ez0 = z0 > halo ? z0 - halo : 0, ez1 = std::min(d.nz, z1 + halo);
        const Dims td{ex1 - ex0, ey1 - ey0, ez1 - ez0};
        in.resize(td.size());
        logits.resize(td.size());
        for (std::size_t z = 0; z < td.nz; ++z)
          for (std::size_t y = 0; y < td.ny; ++y)
            for (std::size_t x = 0; x < td.nx; ++x)
              in[td.index(x, y, z)] = volume(ex0 + x, ey0 + y, ez0 + z);
        net::forward_logits(params, config, in, td, logits);
        for (std::size_t z = z0; z < z1; ++z)
          for (std::size_t y = y0; y < y1; ++y)
            for (std::size_t x = x0; x < x1; ++x) {
              const double p = net::sigmoid(logits[td.index(x - ex0, y - ey0, z - ez0)]);
              out(x, y, z) = std::clamp(static_cast<float>(p), lo, hi);
            }
      }
    }
  }
  return out;
}

}  // namespace hessvessel
