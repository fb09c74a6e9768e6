#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toolsup {

enum class ErrorCode {
  EmptyRegion,
  TargetOutOfRange,
  TurnLimitExceeded,
  InvalidArguments,
  UnmappableBox,
  IndexOutOfLineage,
  NonNumericAnswer,
  JudgeUnavailable,
  MalformedRequest,
  Io,
  Internal,
};

/// Exception carrying a machine-readable code. Every failure the library
/// reports through exceptions uses this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::TargetOutOfRange: return "TargetOutOfRange";
    case ErrorCode::TurnLimitExceeded: return "TurnLimitExceeded";
    case ErrorCode::InvalidArguments: return "InvalidArguments";
    case ErrorCode::UnmappableBox: return "UnmappableBox";
    case ErrorCode::IndexOutOfLineage: return "IndexOutOfLineage";
    case ErrorCode::NonNumericAnswer: return "NonNumericAnswer";
    case ErrorCode::JudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::MalformedRequest: return "MalformedRequest";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace toolsup
