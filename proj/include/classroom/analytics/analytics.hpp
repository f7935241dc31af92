#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "classroom/emotion/emotion_class.hpp"
#include "classroom/error.hpp"
#include "classroom/session/engine.hpp"
#include "classroom/store/store.hpp"

namespace classroom {

using EmotionCounts = std::array<std::size_t, kNumEmotions>;

struct EmotionDistribution {
  std::string session_id;
  EmotionCounts counts{};
  std::array<double, kNumEmotions> fractions{};
  std::size_t total = 0;
  /// Timestamp of the newest observation counted; 0 when there is none.
  TimestampMs as_of = 0;
};

struct TimeBucket {
  TimestampMs bucket_start = 0;
  EmotionCounts counts{};
};

/// Buckets are [start, start + width), aligned to the session start.
struct EngagementTimeSeries {
  std::string session_id;
  TimestampMs bucket_width_ms = 60000;
  std::vector<TimeBucket> buckets;
};

struct StudentProfileView {
  std::string student_id;
  std::string display_name;
  std::optional<AttendanceRecord> attendance;
  std::vector<EmotionObservation> history;
};

struct SessionSummary {
  std::string session_id;
  std::size_t present = 0;
  std::size_t absent = 0;
  /// Empty when no emotion has been observed.
  std::optional<EmotionClass> dominant_emotion;
  std::size_t unmatched_count = 0;
};

/// Lowest code wins ties; nullopt for an all-zero tally.
inline std::optional<EmotionClass> dominant_of(const EmotionCounts& counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumEmotions; ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  if (counts[best] == 0) return std::nullopt;
  return static_cast<EmotionClass>(best);
}

/// Read-only views over committed rows. Every call reads one query result, so
/// a response reflects a single point in time.
class Analytics {
 public:
  explicit Analytics(const SessionEngine& engine) : engine_(engine) {}

  EmotionDistribution emotion_distribution(const std::string& session_id, const TimeRange& range = {}) const {
    (void)engine_.session(session_id);
    EmotionDistribution d;
    d.session_id = session_id;
    for (const auto& o : engine_.store().query_emotions(RecordFilter{session_id, std::nullopt, range})) {
      ++d.counts[static_cast<std::size_t>(code_of(o.emotion))];
      d.as_of = std::max(d.as_of, o.timestamp);
      ++d.total;
    }
    if (d.total > 0) {
      for (std::size_t c = 0; c < kNumEmotions; ++c) {
        d.fractions[c] = static_cast<double>(d.counts[c]) / static_cast<double>(d.total);
      }
    }
    return d;
  }

  EngagementTimeSeries engagement_timeseries(const std::string& session_id, TimestampMs bucket_width_ms) const {
    if (bucket_width_ms <= 0) throw Error(ErrorCode::InvalidBucketWidth, std::to_string(bucket_width_ms));
    const Session session = engine_.session(session_id);
    EngagementTimeSeries ts;
    ts.session_id = session_id;
    ts.bucket_width_ms = bucket_width_ms;
    const auto rows = engine_.store().query_emotions(RecordFilter{session_id, std::nullopt, {}});
    if (rows.empty()) return ts;
    const auto bucket_index = [&](TimestampMs t) {
      const TimestampMs offset = t - session.started_at;
      // floor division; rows before the start are impossible but stay well-defined
      return offset >= 0 ? offset / bucket_width_ms : -((-offset + bucket_width_ms - 1) / bucket_width_ms);
    };
    const TimestampMs first = bucket_index(rows.front().timestamp);
    const TimestampMs last = bucket_index(rows.back().timestamp);
    ts.buckets.resize(static_cast<std::size_t>(last - first + 1));
    for (std::size_t i = 0; i < ts.buckets.size(); ++i) {
      ts.buckets[i].bucket_start = session.started_at + (first + static_cast<TimestampMs>(i)) * bucket_width_ms;
    }
    for (const auto& o : rows) {
      auto& bucket = ts.buckets[static_cast<std::size_t>(bucket_index(o.timestamp) - first)];
      ++bucket.counts[static_cast<std::size_t>(code_of(o.emotion))];
    }
    return ts;
  }

  StudentProfileView student_profile(const std::string& session_id, const std::string& student_id) const {
    (void)engine_.session(session_id);
    const auto profile = engine_.registry().find(student_id);
    if (!profile) throw Error(ErrorCode::UnknownStudent, student_id);
    StudentProfileView view;
    view.student_id = student_id;
    view.display_name = profile->display_name;
    const RecordFilter filter{session_id, student_id, {}};
    const auto attendance = engine_.store().query_attendance(filter);
    if (!attendance.empty()) view.attendance = attendance.front();
    view.history = engine_.store().query_emotions(filter);
    return view;
  }

  SessionSummary session_summary(const std::string& session_id) const {
    const auto snapshot = engine_.session_snapshot(session_id);
    SessionSummary s;
    s.session_id = session_id;
    s.present = snapshot.present.size();
    const std::size_t enrolled = engine_.registry().size();
    s.absent = enrolled > s.present ? enrolled - s.present : 0;
    s.dominant_emotion = dominant_of(emotion_distribution(session_id).counts);
    s.unmatched_count = snapshot.unmatched_count;
    return s;
  }

 private:
  const SessionEngine& engine_;
};

}  // namespace classroom
