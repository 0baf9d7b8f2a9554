#include "hessvessel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "hessvessel/error.hpp"

namespace hessvessel {

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_dims(pred.dims(), gt.dims(), "confusion");
  ConfusionCounts c;
  const auto p = pred.data();
  const auto g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]) {
      if (g[i]) ++c.tp; else ++c.fp;
    } else {
      if (g[i]) ++c.fn; else ++c.tn;
    }
  }
  return c;
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

struct Pt {
  double x, y, z;
};

std::vector<Pt> scaled(std::span<const Point3i> pts, const Spacing& sp) {
  std::vector<Pt> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    out.push_back({static_cast<double>(p[0]) * sp[0], static_cast<double>(p[1]) * sp[1],
                   static_cast<double>(p[2]) * sp[2]});
  }
  return out;
}

double dist(const Pt& a, const Pt& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Bucket grid over a point set for nearest-neighbour queries.
class Grid {
 public:
  explicit Grid(const std::vector<Pt>& pts) : pts_(pts) {
    lo_ = {pts[0].x, pts[0].y, pts[0].z};
    std::array<double, 3> hi = lo_;
    for (const auto& p : pts) {
      const std::array<double, 3> c{p.x, p.y, p.z};
      for (int a = 0; a < 3; ++a) {
        lo_[a] = std::min(lo_[a], c[a]);
        hi[a] = std::max(hi[a], c[a]);
      }
    }
    double extent = 0.0;
    for (int a = 0; a < 3; ++a) extent = std::max(extent, hi[a] - lo_[a]);
    const double per_axis = std::max(1.0, std::cbrt(static_cast<double>(pts.size())));
    cell_ = extent > 0.0 ? extent / per_axis : 1.0;
    for (int a = 0; a < 3; ++a) {
      n_[a] = static_cast<std::int64_t>(std::floor((hi[a] - lo_[a]) / cell_)) + 1;
    }
    start_.assign(static_cast<std::size_t>(n_[0] * n_[1] * n_[2]) + 1, 0);
    std::vector<std::size_t> cell_of(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto c = cell_coords(pts[i]);
      cell_of[i] = flat(c[0], c[1], c[2]);
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t i = 1; i < start_.size(); ++i) start_[i] += start_[i - 1];
    order_.resize(pts.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) order_[fill[cell_of[i]]++] = i;
  }

  double nearest(const Pt& q) const {
    const auto c = cell_coords(q);
    double best = std::numeric_limits<double>::infinity();
    const std::int64_t max_ring =
        std::max({std::abs(c[0]) + n_[0], std::abs(c[1]) + n_[1], std::abs(c[2]) + n_[2]});
    for (std::int64_t r = 0; r <= max_ring; ++r) {
      visit_ring(c, r, q, best);
      // Cells beyond ring r are at least r * cell_ away.
      if (best <= static_cast<double>(r) * cell_) break;
    }
    return best;
  }

 private:
  std::array<std::int64_t, 3> cell_coords(const Pt& p) const {
    return {static_cast<std::int64_t>(std::floor((p.x - lo_[0]) / cell_)),
            static_cast<std::int64_t>(std::floor((p.y - lo_[1]) / cell_)),
            static_cast<std::int64_t>(std::floor((p.z - lo_[2]) / cell_))};
  }
  std::size_t flat(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + n_[0] * (y + n_[1] * z));
  }
  void visit_cell(std::int64_t x, std::int64_t y, std::int64_t z, const Pt& q,
                  double& best) const {
    const std::size_t f = flat(x, y, z);
    for (std::size_t k = start_[f]; k < start_[f + 1]; ++k) {
      best = std::min(best, dist(q, pts_[order_[k]]));
    }
  }
  void visit_ring(const std::array<std::int64_t, 3>& c, std::int64_t r, const Pt& q,
                  double& best) const {
    const std::int64_t z0 = std::max<std::int64_t>(c[2] - r, 0);
    const std::int64_t z1 = std::min<std::int64_t>(c[2] + r, n_[2] - 1);
    const std::int64_t y0 = std::max<std::int64_t>(c[1] - r, 0);
    const std::int64_t y1 = std::min<std::int64_t>(c[1] + r, n_[1] - 1);
    const std::int64_t x0 = std::max<std::int64_t>(c[0] - r, 0);
    const std::int64_t x1 = std::min<std::int64_t>(c[0] + r, n_[0] - 1);
    for (std::int64_t z = z0; z <= z1; ++z) {
      for (std::int64_t y = y0; y <= y1; ++y) {
        if (std::abs(z - c[2]) == r || std::abs(y - c[1]) == r) {
          for (std::int64_t x = x0; x <= x1; ++x) visit_cell(x, y, z, q, best);
        } else {
          if (c[0] - r >= 0 && c[0] - r < n_[0]) visit_cell(c[0] - r, y, z, q, best);
          if (r > 0 && c[0] + r >= 0 && c[0] + r < n_[0]) visit_cell(c[0] + r, y, z, q, best);
        }
      }
    }
  }

  const std::vector<Pt>& pts_;
  std::array<double, 3> lo_{};
  std::array<std::int64_t, 3> n_{};
  double cell_ = 1.0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

void require_nonempty(std::span<const Point3i> g, std::span<const Point3i> s) {
  if (g.empty() || s.empty()) throw UndefinedMetricError("AHD of an empty point set");
}

}  // namespace

RateMetrics rate_metrics(const ConfusionCounts& c) {
  RateMetrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.dsc = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  return m;
}

std::vector<Point3i> mask_points(const BinaryMask& mask) {
  std::vector<Point3i> pts;
  const Dims& d = mask.dims();
  for (std::size_t z = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      for (std::size_t x = 0; x < d.nx; ++x) {
        if (mask(x, y, z)) {
          pts.push_back({static_cast<std::int64_t>(x), static_cast<std::int64_t>(y),
                         static_cast<std::int64_t>(z)});
        }
      }
    }
  }
  return pts;
}

double ahd(std::span<const Point3i> g, std::span<const Point3i> s,
           std::optional<Spacing> spacing) {
  require_nonempty(g, s);
  const Spacing sp = spacing.value_or(Spacing{1.0, 1.0, 1.0});
  const auto gp = scaled(g, sp);
  const auto spts = scaled(s, sp);
  const Grid g_grid(gp), s_grid(spts);
  double g_to_s = 0.0, s_to_g = 0.0;
  for (const auto& p : gp) g_to_s += s_grid.nearest(p);
  for (const auto& p : spts) s_to_g += g_grid.nearest(p);
  return 0.5 * (g_to_s / static_cast<double>(gp.size()) +
                s_to_g / static_cast<double>(spts.size()));
}

double ahd_brute(std::span<const Point3i> g, std::span<const Point3i> s,
                 std::optional<Spacing> spacing) {
  require_nonempty(g, s);
  const Spacing sp = spacing.value_or(Spacing{1.0, 1.0, 1.0});
  const auto gp = scaled(g, sp);
  const auto spts = scaled(s, sp);
  auto directed = [](const std::vector<Pt>& from, const std::vector<Pt>& to) {
    double sum = 0.0;
    for (const auto& a : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : to) best = std::min(best, dist(a, b));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (directed(gp, spts) + directed(spts, gp));
}

double dsclog(double dsc_percent, double n_params) {
  if (!(n_params >= 2.0)) throw ParameterError("DSCLog needs at least 2 parameters");
  if (!(dsc_percent >= 0.0 && dsc_percent <= 100.0)) {
    throw ParameterError("DSC must be given in percent, within [0, 100]");
  }
  return dsc_percent / std::log10(n_params);
}

MetricsReport evaluate(const BinaryMask& pred, const BinaryMask& gt,
                       std::optional<Spacing> spacing, std::optional<std::uint64_t> n_params) {
  MetricsReport r;
  r.counts = confusion(pred, gt);
  r.rates = rate_metrics(r.counts);
  r.ahd_units = spacing ? "mm" : "voxel";
  if (r.counts.tp + r.counts.fp > 0 && r.counts.tp + r.counts.fn > 0) {
    const auto p = mask_points(pred);
    const auto g = mask_points(gt);
    r.ahd = ahd(g, p, spacing);
  }
  r.n_params = n_params;
  if (n_params && r.rates.dsc) {
    r.dsclog = dsclog(100.0 * *r.rates.dsc, static_cast<double>(*n_params));
  }
  return r;
}

std::string to_json(const MetricsReport& report, int indent) {
  using nlohmann::json;
  json j;
  json undefined = json::array();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
      undefined.push_back(key);
    }
  };
  j["counts"] = {{"tp", report.counts.tp},
                 {"fp", report.counts.fp},
                 {"tn", report.counts.tn},
                 {"fn", report.counts.fn}};
  put("dsc", report.rates.dsc);
  put("sensitivity", report.rates.sensitivity);
  put("specificity", report.rates.specificity);
  put("accuracy", report.rates.accuracy);
  put("precision", report.rates.precision);
  put("ahd", report.ahd);
  j["ahd_units"] = report.ahd_units;
  if (report.n_params) {
    j["n_params"] = *report.n_params;
    put("dsclog", report.dsclog);
  }
  j["undefined"] = undefined;
  return j.dump(indent);
}

}  // namespace hessvessel
