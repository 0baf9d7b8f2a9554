#include "hessvessel/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <fstream>
#include <memory>
#include <string>

#include "hessvessel/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "NIfTI and checkpoint I/O assume a little-endian host");

namespace hessvessel {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr float kVoxOffset = 352.0f;

enum NiftiType : std::int16_t {
  kUint8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
};

// Byte offsets into the 348-byte NIfTI-1 header.
namespace off {
constexpr std::size_t sizeof_hdr = 0;
constexpr std::size_t dim = 40;
constexpr std::size_t datatype = 70;
constexpr std::size_t bitpix = 72;
constexpr std::size_t pixdim = 76;
constexpr std::size_t vox_offset = 108;
constexpr std::size_t scl_slope = 112;
constexpr std::size_t scl_inter = 116;
constexpr std::size_t xyzt_units = 123;
constexpr std::size_t descrip = 148;
constexpr std::size_t qform_code = 252;
constexpr std::size_t sform_code = 254;
constexpr std::size_t srow_x = 280;
constexpr std::size_t srow_y = 296;
constexpr std::size_t srow_z = 312;
constexpr std::size_t magic = 344;
}  // namespace off

template <typename T>
T load(const unsigned char* bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes + offset, sizeof(T));
  return value;
}

template <typename T>
void store(unsigned char* bytes, std::size_t offset, T value) {
  std::memcpy(bytes + offset, &value, sizeof(T));
}

struct GzCloser {
  void operator()(gzFile_s* f) const noexcept {
    if (f) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

bool has_gz_suffix(const std::filesystem::path& path) {
  return path.extension() == ".gz";
}

// gzread reads plain files transparently, so it serves both suffixes.
void read_exact(gzFile file, void* dst, std::size_t n, const std::filesystem::path& path,
                const char* what) {
  auto* out = static_cast<unsigned char*>(dst);
  std::size_t done = 0;
  while (done < n) {
    const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
    const int got = gzread(file, out + done, chunk);
    if (got < 0) {
      int errnum = 0;
      const char* msg = gzerror(file, &errnum);
      throw IoError(path.string() + ": read error (" + msg + ")");
    }
    if (got == 0) {
      throw TruncatedFileError(path.string() + ": file truncated while reading " + what);
    }
    done += static_cast<std::size_t>(got);
  }
}

template <typename T>
void convert(const std::vector<unsigned char>& raw, std::vector<float>& dst, double slope,
             double inter) {
  const std::size_t n = dst.size();
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, raw.data() + i * sizeof(T), sizeof(T));
    double x = static_cast<double>(v) * slope + inter;
    dst[i] = std::isfinite(x) ? static_cast<float>(x) : 0.0f;
  }
}

}  // namespace

Volume read_nifti(const std::filesystem::path& path) {
  GzHandle file(gzopen(path.c_str(), "rb"));
  if (!file) throw IoError(path.string() + ": cannot open for reading");

  std::array<unsigned char, kHeaderSize> hdr{};
  read_exact(file.get(), hdr.data(), hdr.size(), path, "header");

  if (load<std::int32_t>(hdr.data(), off::sizeof_hdr) != 348) {
    throw FormatError(path.string() + ": not a little-endian NIfTI-1 header (sizeof_hdr != 348)");
  }
  const char* magic = reinterpret_cast<const char*>(hdr.data() + off::magic);
  if (std::memcmp(magic, "n+1\0", 4) != 0) {
    if (std::memcmp(magic, "ni1\0", 4) == 0) {
      throw FormatError(path.string() + ": two-file NIfTI (.hdr/.img) is not supported");
    }
    throw FormatError(path.string() + ": bad NIfTI-1 magic");
  }

  std::array<std::int16_t, 8> dim{};
  for (std::size_t i = 0; i < 8; ++i) {
    dim[i] = load<std::int16_t>(hdr.data(), off::dim + 2 * i);
  }
  const int ndim = dim[0];
  if (ndim < 3 || ndim > 7) {
    throw DimensionalityError(path.string() + ": expected a 3D image, header declares " +
                              std::to_string(ndim) + " dimensions");
  }
  for (int i = 4; i <= ndim; ++i) {
    if (dim[static_cast<std::size_t>(i)] != 1) {
      throw DimensionalityError(path.string() + ": expected a 3D image, dim[" +
                                std::to_string(i) + "] = " +
                                std::to_string(dim[static_cast<std::size_t>(i)]));
    }
  }
  if (dim[1] <= 0 || dim[2] <= 0 || dim[3] <= 0) {
    throw FormatError(path.string() + ": non-positive image extent");
  }
  const Dims dims{static_cast<std::size_t>(dim[1]), static_cast<std::size_t>(dim[2]),
                  static_cast<std::size_t>(dim[3])};

  Spacing spacing{};
  for (std::size_t i = 0; i < 3; ++i) {
    const float p = std::fabs(load<float>(hdr.data(), off::pixdim + 4 * (i + 1)));
    spacing[i] = (p > 0.0f && std::isfinite(p)) ? static_cast<double>(p) : 1.0;
  }

  const auto datatype = load<std::int16_t>(hdr.data(), off::datatype);
  std::size_t bytes_per_voxel = 0;
  switch (datatype) {
    case kUint8: bytes_per_voxel = 1; break;
    case kInt16: bytes_per_voxel = 2; break;
    case kInt32: bytes_per_voxel = 4; break;
    case kFloat32: bytes_per_voxel = 4; break;
    case kFloat64: bytes_per_voxel = 8; break;
    default:
      throw FormatError(path.string() + ": unsupported NIfTI datatype " +
                        std::to_string(datatype));
  }

  const float vox_offset = load<float>(hdr.data(), off::vox_offset);
  if (!(vox_offset >= static_cast<float>(kHeaderSize))) {
    throw FormatError(path.string() + ": vox_offset precedes end of header");
  }
  std::size_t skip = static_cast<std::size_t>(vox_offset) - kHeaderSize;
  std::vector<unsigned char> scratch(skip);
  if (skip > 0) read_exact(file.get(), scratch.data(), skip, path, "header extension");

  std::vector<unsigned char> raw(dims.size() * bytes_per_voxel);
  read_exact(file.get(), raw.data(), raw.size(), path, "voxel data");

  double slope = load<float>(hdr.data(), off::scl_slope);
  double inter = load<float>(hdr.data(), off::scl_inter);
  if (slope == 0.0 || !std::isfinite(slope)) {
    slope = 1.0;
    inter = 0.0;
  }
  if (!std::isfinite(inter)) inter = 0.0;

  std::vector<float> data(dims.size());
  switch (datatype) {
    case kUint8: convert<std::uint8_t>(raw, data, slope, inter); break;
    case kInt16: convert<std::int16_t>(raw, data, slope, inter); break;
    case kInt32: convert<std::int32_t>(raw, data, slope, inter); break;
    case kFloat32:
      if (slope == 1.0 && inter == 0.0) {
        std::memcpy(data.data(), raw.data(), raw.size());
        for (float& v : data) {
          if (!std::isfinite(v)) v = 0.0f;
        }
      } else {
        convert<float>(raw, data, slope, inter);
      }
      break;
    case kFloat64: convert<double>(raw, data, slope, inter); break;
    default: break;
  }
  return Volume(dims, spacing, std::move(data));
}

void write_nifti(const Volume& volume, const std::filesystem::path& path) {
  const Dims& dims = volume.dims();
  const auto limit = static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max());
  if (dims.nx > limit || dims.ny > limit || dims.nz > limit) {
    throw ShapeError("volume extent exceeds the NIfTI-1 limit of 32767");
  }

  std::array<unsigned char, 352> hdr{};
  store<std::int32_t>(hdr.data(), off::sizeof_hdr, 348);
  const std::array<std::int16_t, 8> dim{3,
                                         static_cast<std::int16_t>(dims.nx),
                                         static_cast<std::int16_t>(dims.ny),
                                         static_cast<std::int16_t>(dims.nz),
                                         1, 1, 1, 1};
  for (std::size_t i = 0; i < 8; ++i) store(hdr.data(), off::dim + 2 * i, dim[i]);
  store<std::int16_t>(hdr.data(), off::datatype, kFloat32);
  store<std::int16_t>(hdr.data(), off::bitpix, 32);
  // pixdim[0] is qfac.
  store<float>(hdr.data(), off::pixdim, 1.0f);
  for (std::size_t i = 0; i < 3; ++i) {
    store<float>(hdr.data(), off::pixdim + 4 * (i + 1), static_cast<float>(volume.spacing()[i]));
  }
  store<float>(hdr.data(), off::vox_offset, kVoxOffset);
  store<float>(hdr.data(), off::scl_slope, 1.0f);
  store<float>(hdr.data(), off::scl_inter, 0.0f);
  hdr[off::xyzt_units] = 2;  // millimetres
  const char descrip[] = "hessvessel";
  std::memcpy(hdr.data() + off::descrip, descrip, sizeof(descrip));
  // Axis-aligned scanner transform carrying the spacing.
  store<std::int16_t>(hdr.data(), off::qform_code, 0);
  store<std::int16_t>(hdr.data(), off::sform_code, 1);
  store<float>(hdr.data(), off::srow_x, static_cast<float>(volume.spacing()[0]));
  store<float>(hdr.data(), off::srow_y + 4, static_cast<float>(volume.spacing()[1]));
  store<float>(hdr.data(), off::srow_z + 8, static_cast<float>(volume.spacing()[2]));
  std::memcpy(hdr.data() + off::magic, "n+1\0", 4);
  // Bytes 348..351 stay zero: no extensions.

  const auto* payload = reinterpret_cast<const unsigned char*>(volume.data().data());
  const std::size_t payload_bytes = volume.size() * sizeof(float);

  if (has_gz_suffix(path)) {
    GzHandle file(gzopen(path.c_str(), "wb6"));
    if (!file) throw IoError(path.string() + ": cannot open for writing");
    auto write_all = [&](const unsigned char* src, std::size_t n) {
      std::size_t done = 0;
      while (done < n) {
        const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
        const int put = gzwrite(file.get(), src + done, chunk);
        if (put <= 0) throw IoError(path.string() + ": write failed");
        done += static_cast<std::size_t>(put);
      }
    };
    write_all(hdr.data(), hdr.size());
    write_all(payload, payload_bytes);
    if (gzclose(file.release()) != Z_OK) throw IoError(path.string() + ": close failed");
    return;
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
  out.write(reinterpret_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
  out.close();
  if (!out) throw IoError(path.string() + ": write failed");
}

BinaryMask read_mask(const std::filesystem::path& path) {
  return mask_from_volume(read_nifti(path));
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path, Spacing spacing) {
  write_nifti(volume_from_mask(mask, spacing), path);
}

}  // namespace hessvessel
