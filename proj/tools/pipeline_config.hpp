#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include <hessvessel/frangi.hpp>
#include <hessvessel/hessnet.hpp>
#include <hessvessel/loss.hpp>
#include <hessvessel/train.hpp>

namespace hessvessel::cli {

struct PathsConfig {
  std::optional<std::filesystem::path> input_dir;
  std::optional<std::filesystem::path> mask_dir;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::filesystem::path> checkpoint;
};

struct ClusteringOptions {
  std::size_t bins = 256;
  std::optional<std::size_t> k;
};

struct ReportOptions {
  /// Report AHD in millimetres using the ground-truth spacing.
  bool ahd_in_mm = false;
  std::optional<std::uint64_t> n_params;
};

/// Everything a --config file may set. Command-line flags override it.
struct PipelineConfig {
  PathsConfig paths;
  HessNetConfig network;
  TrainConfig training;
  LossParams loss;
  FrangiParams frangi;
  ClusteringOptions clustering;
  ReportOptions report;
};

/// Parses a JSON document; every section and key is optional, unknown keys
/// raise SpecError, and the sub-configurations are validated.
PipelineConfig pipeline_config_from_json(const std::string& text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

std::string to_json(const PipelineConfig& config, int indent = 2);

}  // namespace hessvessel::cli
