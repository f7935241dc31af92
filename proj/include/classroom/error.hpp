#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace classroom {

enum class ErrorCode {
  InvalidArgument,
  DuplicateStudentId,
  InvalidEmbedding,
  UnknownStudent,
  EmptyImage,
  ShapeMismatch,
  LengthMismatch,
  MissingClass,
  EmptyDataset,
  UnknownCheckpointVersion,
  UnknownSession,
  AlreadyEnded,
  SessionNotActive,
  TimestampOutOfRange,
  ForeignKeyViolation,
  InvalidLabel,
  StorageFailure,
  BatchTooLarge,
  MalformedPayload,
  UnsupportedVersion,
  GatewayUnavailable,
  InvalidBucketWidth,
  InvalidScenario,
  AllZeroScores,
  InsufficientClips,
  EmptyClip,
  IOFailure,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DuplicateStudentId: return "DuplicateStudentId";
    case ErrorCode::InvalidEmbedding: return "InvalidEmbedding";
    case ErrorCode::UnknownStudent: return "UnknownStudent";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownCheckpointVersion: return "UnknownCheckpointVersion";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::AlreadyEnded: return "AlreadyEnded";
    case ErrorCode::SessionNotActive: return "SessionNotActive";
    case ErrorCode::TimestampOutOfRange: return "TimestampOutOfRange";
    case ErrorCode::ForeignKeyViolation: return "ForeignKeyViolation";
    case ErrorCode::InvalidLabel: return "InvalidLabel";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::BatchTooLarge: return "BatchTooLarge";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::GatewayUnavailable: return "GatewayUnavailable";
    case ErrorCode::InvalidBucketWidth: return "InvalidBucketWidth";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::AllZeroScores: return "AllZeroScores";
    case ErrorCode::InsufficientClips: return "InsufficientClips";
    case ErrorCode::EmptyClip: return "EmptyClip";
    case ErrorCode::IOFailure: return "IOFailure";
  }
  return "Unknown";
}

inline std::optional<ErrorCode> try_parse_error_code(std::string_view name) noexcept {
  for (int i = 0; i <= static_cast<int>(ErrorCode::IOFailure); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  return std::nullopt;
}

/// Every failure raised by the library carries a machine-readable code; the
/// HTTP layer and the gateway acknowledgments report `to_string(code())`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace classroom
