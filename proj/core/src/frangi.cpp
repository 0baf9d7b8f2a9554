#include "hessvessel/frangi.hpp"

#include <algorithm>
#include <cmath>

#include "hessvessel/error.hpp"

namespace hessvessel {

void validate(const FrangiParams& params) {
  if (!(params.alpha > 0.0) || !(params.beta > 0.0)) {
    throw ParameterError("Frangi alpha and beta must be positive");
  }
  if (params.gamma && !(*params.gamma > 0.0)) throw ParameterError("Frangi gamma must be positive");
  if (params.scales.empty()) throw ParameterError("Frangi needs at least one scale");
  for (std::size_t i = 0; i < params.scales.size(); ++i) {
    if (!(params.scales[i] > 0.0)) throw ParameterError("Frangi scales must be positive");
    if (i > 0 && !(params.scales[i] > params.scales[i - 1])) {
      throw ParameterError("Frangi scales must be strictly increasing");
    }
  }
}

double vesselness(const EigenTriple& e, double alpha, double beta, double gamma) {
  if (e.l2 >= 0.0 || e.l3 >= 0.0) return 0.0;
  const double a1 = std::fabs(e.l1), a2 = std::fabs(e.l2), a3 = std::fabs(e.l3);
  const double ra = a2 / a3;
  const double rb = a1 / std::sqrt(a2 * a3);
  const double s2 = e.l1 * e.l1 + e.l2 * e.l2 + e.l3 * e.l3;
  const double plate = 1.0 - std::exp(-(ra * ra) / (2.0 * alpha * alpha));
  const double blob = std::exp(-(rb * rb) / (2.0 * beta * beta));
  const double structure = 1.0 - std::exp(-s2 / (2.0 * gamma * gamma));
  return std::clamp(plate * blob * structure, 0.0, 1.0);
}

Volume frangi_single_scale(const Volume& volume, double sigma, double alpha, double beta,
                           std::optional<double> gamma) {
  const HessianField field = hessian_field(volume, sigma);
  const double g = gamma ? *gamma : 0.5 * max_frobenius_norm(field);
  Volume out(volume.dims(), volume.spacing());
  // A flat response has no structure term; every voxel is in the zero case anyway.
  if (!(g > 0.0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto h = field.at(i);
    const EigenTriple e = eig_sym3(h[0], h[1], h[2], h[3], h[4], h[5]);
    out[i] = static_cast<float>(vesselness(e, alpha, beta, g));
  }
  return out;
}

Volume frangi_vesselness(const Volume& volume, const FrangiParams& params) {
  validate(params);
  Volume best(volume.dims(), volume.spacing());
  for (double sigma : params.scales) {
    const Volume v = frangi_single_scale(volume, sigma, params.alpha, params.beta, params.gamma);
    for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], v[i]);
  }
  return best;
}

Histogram value_histogram(const Volume& volume, std::size_t n_bins) {
  if (n_bins < 2) throw ParameterError("histogram needs at least 2 bins");
  const auto [lo_it, hi_it] = std::minmax_element(volume.data().begin(), volume.data().end());
  Histogram h{*lo_it, *hi_it, std::vector<double>(n_bins, 0.0)};
  if (!(h.hi > h.lo)) return h;
  const double scale = static_cast<double>(n_bins) / (h.hi - h.lo);
  for (float v : volume.data()) {
    auto b = static_cast<std::size_t>((v - h.lo) * scale);
    h.counts[std::min(b, n_bins - 1)] += 1.0;
  }
  return h;
}

std::size_t otsu_edge(const Histogram& h) {
  const std::size_t n = h.counts.size();
  if (n < 2) throw ParameterError("histogram needs at least 2 bins");
  double total = 0.0, total_sum = 0.0, total_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += h.counts[i];
    total_sum += h.counts[i] * h.center(i);
    total_sq += h.counts[i] * h.center(i) * h.center(i);
  }
  if (!(total > 0.0)) throw DegenerateInputError("Otsu on an empty histogram");
  const double mean = total_sum / total;
  const double total_var = std::max(total_sq / total - mean * mean, 0.0);
  const double tie_tol = 1e-12 * total_var;

  std::size_t best_k = 0;
  double best = -1.0;
  double w1 = 0.0, s1 = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    w1 += h.counts[k - 1];
    s1 += h.counts[k - 1] * h.center(k - 1);
    const double w2 = total - w1;
    if (w1 <= 0.0 || w2 <= 0.0) continue;
    const double mu1 = s1 / w1;
    const double mu2 = (total_sum - s1) / w2;
    const double p1 = w1 / total, p2 = w2 / total;
    const double between = p1 * p2 * (mu1 - mu2) * (mu1 - mu2);
    if (best_k == 0 || between > best + tie_tol) {
      best = between;
      best_k = k;
    }
  }
  if (best_k == 0) throw DegenerateInputError("Otsu needs at least two occupied bins");
  return best_k;
}

double otsu_threshold(const Volume& volume, std::size_t n_bins) {
  const Histogram h = value_histogram(volume, n_bins);
  if (!(h.hi > h.lo)) throw DegenerateInputError("Otsu threshold of a constant volume");
  return h.edge(otsu_edge(h));
}

BinaryMask binarize(const Volume& volume, double threshold) {
  BinaryMask mask(volume.dims());
  for (std::size_t i = 0; i < volume.size(); ++i) mask.set(i, volume[i] > threshold);
  return mask;
}

}  // namespace hessvessel
