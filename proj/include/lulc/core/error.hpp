#pragma once

#include <stdexcept>
#include <string>

namespace lulc {

/// Error classes. Each maps to a distinct CLI exit code (see docs/formats.md).
enum class ErrorKind {
  invalid_argument,
  shape,
  index,
  io,
  format,
  truncated,
  version,
  missing_artifact,
  numerical,
  config,
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return 2;
    case ErrorKind::config: return 3;
    case ErrorKind::missing_artifact: return 4;
    case ErrorKind::io: return 5;
    case ErrorKind::format: return 6;
    case ErrorKind::truncated: return 7;
    case ErrorKind::version: return 8;
    case ErrorKind::shape: return 9;
    case ErrorKind::index: return 10;
    case ErrorKind::numerical: return 11;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define LULC_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

LULC_DEFINE_ERROR(InvalidArgument, invalid_argument)
LULC_DEFINE_ERROR(ShapeError, shape)
LULC_DEFINE_ERROR(IndexError, index)
LULC_DEFINE_ERROR(IoError, io)
LULC_DEFINE_ERROR(FormatError, format)
LULC_DEFINE_ERROR(TruncatedFileError, truncated)
LULC_DEFINE_ERROR(VersionError, version)
LULC_DEFINE_ERROR(MissingArtifactError, missing_artifact)
LULC_DEFINE_ERROR(NumericalError, numerical)
LULC_DEFINE_ERROR(ConfigError, config)

#undef LULC_DEFINE_ERROR

}  // namespace lulc
