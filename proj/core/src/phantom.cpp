#include "hessvessel/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hessvessel/error.hpp"
#include "hessvessel/rng.hpp"
#include "json.hpp"

namespace hessvessel {

using nlohmann::json;

double point_segment_distance(const Point3& p, const Point3& a, const Point3& b) {
  const Point3 ab{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const Point3 ap{p[0] - a[0], p[1] - a[1], p[2] - a[2]};
  const double len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2, 0.0, 1.0);
  const double dx = ap[0] - t * ab[0];
  const double dy = ap[1] - t * ab[1];
  const double dz = ap[2] - t * ab[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void validate(const PhantomSpec& spec) {
  if (spec.dims.size() == 0) throw SpecError("phantom dims must be positive");
  for (double s : spec.spacing) {
    if (!(s > 0.0)) throw SpecError("phantom spacing must be positive");
  }
  if (!(spec.noise_sigma >= 0.0)) throw SpecError("noise_sigma must be non-negative");
  for (std::size_t t = 0; t < spec.tubes.size(); ++t) {
    const Tube& tube = spec.tubes[t];
    const std::string id = "tube " + std::to_string(t);
    if (!(tube.radius > 0.0)) throw SpecError(id + ": radius must be positive");
    if (!(tube.intensity > spec.background)) {
      throw SpecError(id + ": intensity must exceed the background");
    }
    for (const Point3* p : {&tube.start, &tube.end}) {
      for (std::size_t a = 0; a < 3; ++a) {
        const double hi = static_cast<double>(spec.dims[a]) - 1.0;
        if (!((*p)[a] >= 0.0 && (*p)[a] <= hi)) {
          throw SpecError(id + ": endpoint outside the grid");
        }
      }
    }
  }
}

Phantom make_phantom(const PhantomSpec& spec) {
  validate(spec);
  const Dims& d = spec.dims;
  std::vector<double> fg(d.size(), -std::numeric_limits<double>::infinity());
  BinaryMask mask(d);

  for (const Tube& tube : spec.tubes) {
    std::array<std::size_t, 3> lo{}, hi{};
    for (std::size_t a = 0; a < 3; ++a) {
      const double mn = std::min(tube.start[a], tube.end[a]) - tube.radius;
      const double mx = std::max(tube.start[a], tube.end[a]) + tube.radius;
      lo[a] = static_cast<std::size_t>(std::max(0.0, std::ceil(mn)));
      hi[a] = static_cast<std::size_t>(
          std::min(static_cast<double>(d[a]) - 1.0, std::floor(mx)));
    }
    for (std::size_t z = lo[2]; z <= hi[2]; ++z) {
      for (std::size_t y = lo[1]; y <= hi[1]; ++y) {
        for (std::size_t x = lo[0]; x <= hi[0]; ++x) {
          const Point3 p{static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
          if (point_segment_distance(p, tube.start, tube.end) <= tube.radius) {
            const std::size_t i = d.index(x, y, z);
            mask.set(i, true);
            fg[i] = std::max(fg[i], tube.intensity);
          }
        }
      }
    }
  }

  Volume volume(d, spec.spacing);
  Rng rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    double v = mask[i] ? fg[i] : spec.background;
    if (spec.noise_sigma > 0.0) v += noise(rng);
    volume[i] = static_cast<float>(v);
  }
  return {std::move(volume), std::move(mask)};
}

PhantomSpec random_tube_spec(Dims dims, const RandomTubeOptions& options, std::uint64_t seed) {
  if (options.radius_min <= 0.0 || options.radius_max < options.radius_min) {
    throw SpecError("random tubes need 0 < radius_min <= radius_max");
  }
  PhantomSpec spec;
  spec.dims = dims;
  spec.background = options.background;
  spec.noise_sigma = options.noise_sigma;
  spec.seed = derive_seed(seed, SeedStage::kPhantom, {0});

  Rng rng(derive_seed(seed, SeedStage::kPhantom, {1}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double min_extent =
      static_cast<double>(std::min({dims.nx, dims.ny, dims.nz}));
  const double min_len = options.min_length_fraction * min_extent;

  for (std::size_t t = 0; t < options.n_tubes; ++t) {
    Tube tube;
    tube.radius = options.radius_min + (options.radius_max - options.radius_min) * unit(rng);
    tube.intensity = options.foreground;
    const double margin = std::ceil(tube.radius) + 1.0;
    auto draw_point = [&] {
      Point3 p{};
      for (std::size_t a = 0; a < 3; ++a) {
        const double span = static_cast<double>(dims[a]) - 1.0 - 2.0 * margin;
        p[a] = span > 0.0 ? margin + span * unit(rng) : (static_cast<double>(dims[a]) - 1.0) / 2.0;
      }
      return p;
    };
    for (int attempt = 0; attempt < 1000; ++attempt) {
      tube.start = draw_point();
      tube.end = draw_point();
      const double len = point_segment_distance(tube.start, tube.end, tube.end);
      if (len >= min_len) break;
    }
    spec.tubes.push_back(tube);
  }
  return spec;
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const char* where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw SpecError(std::string(where) + ": unknown key '" + key + "'");
  }
}

Point3 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw SpecError("tube endpoint must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

PhantomSpec phantom_spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecError(std::string("phantom spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SpecError("phantom spec must be a JSON object");
  reject_unknown(doc, {"dims", "spacing", "tubes", "background", "noise_sigma", "seed"},
                 "phantom spec");
  PhantomSpec spec;
  try {
    const json& dims = doc.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw SpecError("dims must be a 3-element array");
    for (const auto& v : dims) {
      if (!v.is_number_integer() || v.get<long long>() <= 0) {
        throw SpecError("dims must be positive integers");
      }
    }
    spec.dims = {dims[0].get<std::size_t>(), dims[1].get<std::size_t>(), dims[2].get<std::size_t>()};
    if (doc.contains("spacing")) {
      const json& s = doc["spacing"];
      if (!s.is_array() || s.size() != 3) throw SpecError("spacing must be a 3-element array");
      spec.spacing = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
    }
    spec.background = doc.value("background", 0.0);
    spec.noise_sigma = doc.value("noise_sigma", 0.0);
    spec.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("tubes")) {
      for (const json& t : doc["tubes"]) {
        if (!t.is_object()) throw SpecError("each tube must be a JSON object");
        reject_unknown(t, {"start", "end", "radius", "intensity"}, "tube");
        Tube tube;
        tube.start = point_from_json(t.at("start"));
        tube.end = point_from_json(t.at("end"));
        tube.radius = t.at("radius").get<double>();
        tube.intensity = t.value("intensity", 1.0);
        spec.tubes.push_back(tube);
      }
    }
  } catch (const json::exception& e) {
    throw SpecError(std::string("phantom spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

std::string phantom_spec_to_json(const PhantomSpec& spec) {
  json doc;
  doc["dims"] = {spec.dims.nx, spec.dims.ny, spec.dims.nz};
  doc["spacing"] = spec.spacing;
  doc["background"] = spec.background;
  doc["noise_sigma"] = spec.noise_sigma;
  doc["seed"] = spec.seed;
  doc["tubes"] = json::array();
  for (const Tube& t : spec.tubes) {
    doc["tubes"].push_back(
        {{"start", t.start}, {"end", t.end}, {"radius", t.radius}, {"intensity", t.intensity}});
  }
  return doc.dump(2);
}

}  // namespace hessvessel
