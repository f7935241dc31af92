#pragma once

#include <optional>
#include <string>

#include "classroom/emotion/emotion_class.hpp"
#include "classroom/types.hpp"

namespace classroom {

enum class SessionStatus { Active, Ended };

constexpr std::string_view to_string(SessionStatus s) noexcept {
  return s == SessionStatus::Active ? "active" : "ended";
}

struct Session {
  std::string session_id;
  std::string course_label;
  TimestampMs started_at = 0;
  std::optional<TimestampMs> ended_at;
  SessionStatus status = SessionStatus::Active;
  std::size_t unmatched_count = 0;
};

struct AttendanceRecord {
  std::string student_id;
  std::string session_id;
  TimestampMs timestamp = 0;
  double confidence = 0.0;

  bool operator==(const AttendanceRecord&) const = default;
};

struct EmotionObservation {
  std::string student_id;
  std::string session_id;
  EmotionClass emotion = EmotionClass::Boredom;
  double confidence = 0.0;
  TimestampMs timestamp = 0;

  bool operator==(const EmotionObservation&) const = default;
};

enum class InsertOutcome { Inserted, DuplicateRejected };

/// Selection for record queries: one session, optionally one student and a
/// half-open time window.
struct RecordFilter {
  std::string session_id;
  std::optional<std::string> student_id;
  TimeRange range;
};

}  // namespace classroom
