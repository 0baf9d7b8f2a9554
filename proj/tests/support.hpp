#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <hessvessel/volume.hpp>

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("hessvessel_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline hessvessel::Volume random_volume(hessvessel::Dims d, std::uint64_t seed, double lo = -1.0,
                                        double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  hessvessel::Volume v(d);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(u(rng));
  return v;
}

/// Hand-assembled NIfTI-1 header (348 bytes) plus 4 bytes of extension flags.
struct RawNifti {
  std::vector<std::int16_t> dim{3, 4, 4, 4, 1, 1, 1, 1};
  std::int16_t datatype = 16;
  std::int16_t bitpix = 32;
  std::vector<float> pixdim{1, 1, 1, 1, 1, 1, 1, 1};
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::string magic{"n+1\0", 4};

  std::vector<char> header() const {
    std::vector<char> h(352, 0);
    const std::int32_t sizeof_hdr = 348;
    std::memcpy(h.data(), &sizeof_hdr, 4);
    std::memcpy(h.data() + 40, dim.data(), 16);
    std::memcpy(h.data() + 70, &datatype, 2);
    std::memcpy(h.data() + 72, &bitpix, 2);
    std::memcpy(h.data() + 76, pixdim.data(), 32);
    const float vox_offset = 352.0f;
    std::memcpy(h.data() + 108, &vox_offset, 4);
    std::memcpy(h.data() + 112, &scl_slope, 4);
    std::memcpy(h.data() + 116, &scl_inter, 4);
    std::memcpy(h.data() + 344, magic.data(), 4);
    return h;
  }

  template <typename T>
  void write(const std::filesystem::path& path, const std::vector<T>& data) const {
    std::ofstream f(path, std::ios::binary);
    const auto h = header();
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
  }
};

}  // namespace testing_support
