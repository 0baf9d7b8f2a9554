#pragma once

#include <filesystem>

#include "hessvessel/volume.hpp"

namespace hessvessel {

/// Reads a single-file NIfTI-1 image (.nii or .nii.gz, little-endian).
///
/// Supported datatypes are uint8, int16, int32, float32 and float64. A nonzero
/// scl_slope is applied. Trailing singleton dimensions (dim[4..7] == 1) are
/// accepted; anything else that is not 3D raises DimensionalityError. Only the
/// spacing is taken from the header; the qform/sform affine is ignored.
/// Non-finite voxel values are replaced by 0.
///
/// Throws IoError when the file cannot be opened, TruncatedFileError when it
/// ends early and FormatError for a bad header or unsupported datatype.
Volume read_nifti(const std::filesystem::path& path);

/// Writes `volume` as float32 NIfTI-1. A ".gz" suffix selects gzip compression.
/// Throws IoError when the file cannot be written.
void write_nifti(const Volume& volume, const std::filesystem::path& path);

/// Convenience wrappers for label images. read_mask thresholds at 0.5.
BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path,
                Spacing spacing = {1.0, 1.0, 1.0});

}  // namespace hessvessel
