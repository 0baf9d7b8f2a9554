#include "pipeline_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include <hessvessel/checkpoint.hpp>
#include <hessvessel/error.hpp>

namespace hessvessel::cli {

namespace {

using nlohmann::json;
using Setters = std::map<std::string, std::function<void(const json&)>>;

void apply(const json& j, const std::string& section, const Setters& setters) {
  if (!j.is_object()) throw SpecError("config section '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw SpecError("unknown config key '" + (section.empty() ? key : section + "." + key) + "'");
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw SpecError("bad value for config key '" + section + "." + key + "': " + e.what());
    }
  }
}

template <typename T>
std::function<void(const json&)> set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

template <typename T>
std::function<void(const json&)> set_opt(std::optional<T>& field) {
  return [&field](const json& v) {
    if (v.is_null()) {
      field.reset();
    } else {
      field = v.get<T>();
    }
  };
}

std::function<void(const json&)> set_path(std::optional<std::filesystem::path>& field) {
  return [&field](const json& v) { field = std::filesystem::path(v.get<std::string>()); };
}

}  // namespace

PipelineConfig pipeline_config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw SpecError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  auto& p = c.paths;
  auto& t = c.training;
  auto& l = c.loss;
  auto& f = c.frangi;

  apply(root, "",
        {{"paths",
          [&](const json& j) {
            apply(j, "paths",
                  {{"input_dir", set_path(p.input_dir)},
                   {"mask_dir", set_path(p.mask_dir)},
                   {"output_dir", set_path(p.output_dir)},
                   {"checkpoint", set_path(p.checkpoint)}});
          }},
         {"network", [&](const json& j) { c.network = config_from_json(j.dump()); }},
         {"training",
          [&](const json& j) {
            apply(j, "training",
                  {{"epochs", set(t.epochs)},
                   {"lr_max", set(t.lr_max)},
                   {"lr_min", set(t.lr_min)},
                   {"beta1", set(t.beta1)},
                   {"beta2", set(t.beta2)},
                   {"eps", set(t.eps)},
                   {"weight_decay", set(t.weight_decay)},
                   {"t0", set(t.t0)},
                   {"t_mult", set(t.t_mult)},
                   {"patch_size", set(t.patch_size)},
                   {"patches_per_volume", set(t.patches_per_volume)},
                   {"foreground_patch_fraction", set(t.foreground_patch_fraction)},
                   {"threshold", set(t.threshold)},
                   {"seed", set(t.seed)},
                   {"augment", set(t.augment)},
                   {"log_gamma_range",
                    [&](const json& v) {
                      const auto r = v.get<std::array<double, 2>>();
                      t.gamma_range = {r[0], r[1]};
                    }},
                   {"elastic_control_grid", set(t.elastic.control_grid)},
                   {"elastic_max_displacement", set(t.elastic.max_displacement_voxels)}});
          }},
         {"loss",
          [&](const json& j) {
            apply(j, "loss",
                  {{"tversky_alpha", set(l.tversky_alpha)},
                   {"tversky_beta", set(l.tversky_beta)},
                   {"gamma_tversky", set(l.gamma_tversky)},
                   {"gamma_ce", set(l.gamma_ce)},
                   {"w_tversky", set(l.w_tversky)},
                   {"w_ce", set(l.w_ce)},
                   {"smooth", set(l.smooth)}});
          }},
         {"frangi",
          [&](const json& j) {
            apply(j, "frangi",
                  {{"alpha", set(f.alpha)},
                   {"beta", set(f.beta)},
                   {"gamma", set_opt(f.gamma)},
                   {"scales", set(f.scales)}});
          }},
         {"clustering",
          [&](const json& j) {
            apply(j, "clustering",
                  {{"bins", set(c.clustering.bins)}, {"k", set_opt(c.clustering.k)}});
          }},
         {"report", [&](const json& j) {
            apply(j, "report",
                  {{"ahd_in_mm", set(c.report.ahd_in_mm)},
                   {"n_params", set_opt(c.report.n_params)}});
          }}});

  validate(c.network);
  validate(c.training, c.network);
  validate(c.loss);
  validate(c.frangi);
  if (c.clustering.bins < 2) throw SpecError("clustering.bins must be at least 2");
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return pipeline_config_from_json(ss.str());
}

std::string to_json(const PipelineConfig& c, int indent) {
  json paths = json::object();
  auto put_path = [&](const char* key, const std::optional<std::filesystem::path>& v) {
    if (v) paths[key] = v->string();
  };
  put_path("input_dir", c.paths.input_dir);
  put_path("mask_dir", c.paths.mask_dir);
  put_path("output_dir", c.paths.output_dir);
  put_path("checkpoint", c.paths.checkpoint);
  const auto& t = c.training;
  const auto& l = c.loss;
  json frangi{{"alpha", c.frangi.alpha}, {"beta", c.frangi.beta}, {"scales", c.frangi.scales}};
  frangi["gamma"] = c.frangi.gamma ? json(*c.frangi.gamma) : json(nullptr);
  json clustering{{"bins", c.clustering.bins}};
  clustering["k"] = c.clustering.k ? json(*c.clustering.k) : json(nullptr);
  json report{{"ahd_in_mm", c.report.ahd_in_mm}};
  report["n_params"] = c.report.n_params ? json(*c.report.n_params) : json(nullptr);
  const json j{
      {"paths", paths},
      {"network", json::parse(config_to_json(c.network))},
      {"training",
       {{"epochs", t.epochs},
        {"lr_max", t.lr_max},
        {"lr_min", t.lr_min},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"eps", t.eps},
        {"weight_decay", t.weight_decay},
        {"t0", t.t0},
        {"t_mult", t.t_mult},
        {"patch_size", t.patch_size},
        {"patches_per_volume", t.patches_per_volume},
        {"foreground_patch_fraction", t.foreground_patch_fraction},
        {"threshold", t.threshold},
        {"seed", t.seed},
        {"augment", t.augment},
        {"log_gamma_range", {t.gamma_range.lo, t.gamma_range.hi}},
        {"elastic_control_grid", t.elastic.control_grid},
        {"elastic_max_displacement", t.elastic.max_displacement_voxels}}},
      {"loss",
       {{"tversky_alpha", l.tversky_alpha},
        {"tversky_beta", l.tversky_beta},
        {"gamma_tversky", l.gamma_tversky},
        {"gamma_ce", l.gamma_ce},
        {"w_tversky", l.w_tversky},
        {"w_ce", l.w_ce},
        {"smooth", l.smooth}}},
      {"frangi", frangi},
      {"clustering", clustering},
      {"report", report}};
  return j.dump(indent);
}

}  // namespace hessvessel::cli
