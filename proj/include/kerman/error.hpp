#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kerman {

enum class ErrorKind {
  WindowTooSmall,
  DimensionMismatch,
  NotTrained,
  FrameOutOfOrder,
  MissingFrame,
  CorruptImage,
  ParseError,
  NegativeDimension,
  IoFailure,
  TrajectoryOutOfBounds,
  SamplingUnavailable,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::WindowTooSmall: return "WindowTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotTrained: return "NotTrained";
    case ErrorKind::FrameOutOfOrder: return "FrameOutOfOrder";
    case ErrorKind::MissingFrame: return "MissingFrame";
    case ErrorKind::CorruptImage: return "CorruptImage";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NegativeDimension: return "NegativeDimension";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::TrajectoryOutOfBounds: return "TrajectoryOutOfBounds";
    case ErrorKind::SamplingUnavailable: return "SamplingUnavailable";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

// All library failures are reported through this one exception type; the
// kind lets callers (the CLI in particular) map failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace kerman
