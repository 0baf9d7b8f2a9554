#pragma once

#include <stdexcept>
#include <string>

namespace hessvessel {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, unreadable or unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File ended before all declared bytes were read.
class TruncatedFileError : public IoError {
 public:
  using IoError::IoError;
};

/// File contents do not follow the expected on-disk layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Image is not three-dimensional.
class DimensionalityError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Mismatched or too-small grid dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input for which the operation has no meaningful result (e.g. constant volume).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid phantom description.
class SpecError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// Metric with an empty set or zero denominator.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace hessvessel
