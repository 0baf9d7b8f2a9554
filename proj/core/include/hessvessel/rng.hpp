#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hessvessel {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stage tags used when fanning one user seed out to independent streams.
enum class SeedStage : std::uint64_t {
  kInit = 1,
  kGamma = 2,
  kElastic = 3,
  kPatches = 4,
  kShuffle = 5,
  kPhantom = 6,
};

/// Deterministic child seed for (base, stage, indices...).
inline std::uint64_t derive_seed(std::uint64_t base, SeedStage stage,
                                 std::initializer_list<std::uint64_t> indices = {}) noexcept {
  std::uint64_t h = mix64(base ^ mix64(static_cast<std::uint64_t>(stage)));
  for (std::uint64_t i : indices) h = mix64(h ^ mix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace hessvessel
