#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hessvessel/hessnet.hpp"
#include "hessvessel/optim.hpp"

namespace hessvessel {

/// Trained network plus what is needed to resume training.
struct Checkpoint {
  HessNetConfig config;
  ParamStore params;
  std::optional<OptState> opt;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout (little-endian):
///   "HSSN" | u32 version | u64 header length | JSON header |
///   f64[param_count] values | optional: u64 t, f64[n] m, f64[n] v
void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path);

/// Throws IoError if the file cannot be opened, TruncatedFileError on a short
/// read, FormatError on a bad magic or header, VersionError on an unknown
/// version.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// JSON text of a network configuration and its parser (unknown keys rejected).
std::string config_to_json(const HessNetConfig& config);
HessNetConfig config_from_json(const std::string& text);

}  // namespace hessvessel
