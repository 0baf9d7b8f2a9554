#include "hessvessel/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "hessvessel/error.hpp"

namespace hessvessel {

IntensityHistogram intensity_histogram(const Volume& volume, std::size_t bins,
                                       std::optional<double> upper) {
  if (bins < 2) throw ParameterError("histogram needs at least 2 bins");
  double hi = 0.0;
  if (upper) {
    if (!(*upper > 0.0) || !std::isfinite(*upper)) {
      throw ParameterError("histogram upper bound must be positive");
    }
    hi = *upper;
  } else {
    for (float v : volume.data()) hi = std::max(hi, static_cast<double>(v));
  }
  if (!(hi > 0.0)) throw DegenerateInputError("volume has no positive intensities");

  IntensityHistogram h;
  h.edges.resize(bins + 1);
  const double width = hi / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = width * static_cast<double>(i);
  h.edges[bins] = hi;

  std::vector<std::uint64_t> counts(bins, 0);
  std::uint64_t total = 0;
  for (float fv : volume.data()) {
    const double v = fv;
    if (!(v > 0.0) || v > hi) continue;
    // Bin i covers (edge_i, edge_{i+1}].
    const double pos = std::ceil(v / width) - 1.0;
    const auto b = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(bins - 1)));
    ++counts[b];
    ++total;
  }
  if (total == 0) throw DegenerateInputError("volume has no intensities in (0, upper]");
  h.freq.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    h.freq[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return h;
}

double histogram_distance(const IntensityHistogram& a, const IntensityHistogram& b) {
  if (a.freq.size() != b.freq.size() || a.edges != b.edges) {
    throw ShapeError("histograms have different bins");
  }
  double num = 0.0, max_a = 0.0, max_b = 0.0;
  for (std::size_t i = 0; i < a.freq.size(); ++i) {
    num = std::max(num, std::fabs(a.freq[i] - b.freq[i]));
    max_a = std::max(max_a, a.freq[i]);
    max_b = std::max(max_b, b.freq[i]);
  }
  const double den = std::max(max_a, max_b);
  if (!(den > 0.0)) throw DegenerateInputError("histogram distance of empty histograms");
  return num / den;
}

DistanceMatrix distance_matrix(const std::vector<IntensityHistogram>& histograms) {
  const std::size_t n = histograms.size();
  if (n < 2) throw ShapeError("distance matrix needs at least two histograms");
  DistanceMatrix dm{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = histogram_distance(histograms[i], histograms[j]);
      dm(i, j) = d;
      dm(j, i) = d;
    }
  }
  return dm;
}

ClusterAssignment ward_cluster(const DistanceMatrix& dm, std::size_t k) {
  const std::size_t n = dm.n;
  if (n == 0 || dm.d.size() != n * n) throw ShapeError("malformed distance matrix");
  if (k < 1 || k > n) {
    throw ParameterError("cluster count " + std::to_string(k) + " outside [1, " +
                         std::to_string(n) + "]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (dm(i, i) != 0.0) throw ShapeError("distance matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      if (dm(i, j) != dm(j, i) || !(dm(i, j) >= 0.0) || !std::isfinite(dm(i, j))) {
        throw ShapeError("distance matrix must be symmetric, finite and non-negative");
      }
    }
  }

  // Slot i holds a live cluster until merged into a lower slot.
  std::vector<double> d2(n * n);
  for (std::size_t i = 0; i < n * n; ++i) d2[i] = dm.d[i] * dm.d[i];
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> size(n, 1), id(n), slot_of(n);
  for (std::size_t i = 0; i < n; ++i) id[i] = slot_of[i] = i;

  ClusterAssignment out;
  out.k = k;
  auto snapshot = [&] {
    out.labels.assign(n, 0);
    std::vector<std::size_t> relabel(n, n);
    std::size_t next = 0;
    for (std::size_t item = 0; item < n; ++item) {
      std::size_t& l = relabel[slot_of[item]];
      if (l == n) l = next++;
      out.labels[item] = l;
    }
  };
  if (k == n) snapshot();

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (alive[j] && d2[i * n + j] < best) {
          best = d2[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(size[bi]), nj = static_cast<double>(size[bj]);
    for (std::size_t m = 0; m < n; ++m) {
      if (!alive[m] || m == bi || m == bj) continue;
      const double nm = static_cast<double>(size[m]);
      const double v =
          ((ni + nm) * d2[bi * n + m] + (nj + nm) * d2[bj * n + m] - nm * best) / (ni + nj + nm);
      d2[bi * n + m] = d2[m * n + bi] = std::max(v, 0.0);
    }
    out.merges.push_back(
        {std::min(id[bi], id[bj]), std::max(id[bi], id[bj]), std::sqrt(best), size[bi] + size[bj]});
    alive[bj] = false;
    size[bi] += size[bj];
    id[bi] = n + step;
    for (std::size_t item = 0; item < n; ++item) {
      if (slot_of[item] == bj) slot_of[item] = bi;
    }
    if (n - (step + 1) == k) snapshot();
  }
  return out;
}

std::string to_json(const DistanceMatrix& dm, const std::vector<std::string>& names, int indent) {
  using nlohmann::json;
  json rows = json::array();
  for (std::size_t i = 0; i < dm.n; ++i) {
    rows.push_back(std::vector<double>(dm.d.begin() + static_cast<std::ptrdiff_t>(i * dm.n),
                                       dm.d.begin() + static_cast<std::ptrdiff_t>((i + 1) * dm.n)));
  }
  return json{{"items", names}, {"distances", rows}}.dump(indent);
}

std::string to_json(const ClusterAssignment& ca, const std::vector<std::string>& names,
                    int indent) {
  using nlohmann::json;
  json merges = json::array();
  for (const auto& m : ca.merges) {
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  }
  json clusters = json::array();
  for (std::size_t c = 0; c < ca.k; ++c) {
    json members = json::array();
    for (std::size_t i = 0; i < ca.labels.size(); ++i) {
      if (ca.labels[i] == c) members.push_back(i < names.size() ? json(names[i]) : json(i));
    }
    clusters.push_back(members);
  }
  return json{{"items", names},   {"k", ca.k},       {"labels", ca.labels},
              {"clusters", clusters}, {"merges", merges}}
      .dump(indent);
}

}  // namespace hessvessel
