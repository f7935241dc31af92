#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "classroom/emotion/classifier.hpp"
#include "classroom/error.hpp"
#include "classroom/identity/registry.hpp"
#include "classroom/store/store.hpp"

namespace classroom {

/// One detected face at one instant, as handed over by a perception source.
struct DetectionEvent {
  std::string session_id;
  TimestampMs captured_at = 0;
  std::vector<double> embedding;
  RawImage face_crop;
  std::string source_id;
};

enum class OutcomeKind {
  AttendanceMarked,
  AttendanceSkippedEmotionLogged,
  UnmatchedIgnored,
  Rejected,
};

constexpr std::string_view to_string(OutcomeKind k) noexcept {
  switch (k) {
    case OutcomeKind::AttendanceMarked: return "attendance_marked";
    case OutcomeKind::AttendanceSkippedEmotionLogged: return "attendance_skipped_emotion_logged";
    case OutcomeKind::UnmatchedIgnored: return "unmatched_ignored";
    case OutcomeKind::Rejected: return "rejected";
  }
  return "";
}

inline std::optional<OutcomeKind> try_parse_outcome(std::string_view name) noexcept {
  for (auto k : {OutcomeKind::AttendanceMarked, OutcomeKind::AttendanceSkippedEmotionLogged,
                 OutcomeKind::UnmatchedIgnored, OutcomeKind::Rejected}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

struct ClassifiedEmotion {
  EmotionClass emotion = EmotionClass::Boredom;
  double confidence = 0.0;
};

struct ProcessOutcome {
  OutcomeKind kind = OutcomeKind::Rejected;
  std::optional<MatchResult> match;
  std::optional<ClassifiedEmotion> emotion;
  /// Set only for Rejected outcomes.
  std::optional<ErrorCode> reject_reason;
};

struct PresentStudent {
  std::string student_id;
  std::string display_name;
  TimestampMs timestamp = 0;
  double confidence = 0.0;
};

struct SessionSnapshot {
  Session session;
  /// Ordered by attendance timestamp, then student_id.
  std::vector<PresentStudent> present;
  std::size_t unmatched_count = 0;
};

/// Owns session lifecycle and the per-session attendance flags.
///
/// Each session has its own mutex; every detection for a session is applied
/// under it, so events for one session take effect in arrival order while
/// different sessions proceed independently. Attendance flags are rebuilt
/// from the store on construction, so a restarted engine never re-marks a
/// student.
class SessionEngine {
 public:
  SessionEngine(Store& store, EnrollmentRegistry& registry, std::shared_ptr<const EmotionClassifier> classifier,
                MatcherConfig matcher = {})
      : store_(store), registry_(registry), classifier_(std::move(classifier)), matcher_(matcher) {
    matcher_.validate();
    if (!classifier_) throw Error(ErrorCode::InvalidArgument, "an emotion classifier is required");
    sync_students();
    for (const auto& s : store_.sessions()) {
      auto slot = std::make_unique<SessionSlot>();
      slot->info = s;
      for (const auto& a : store_.query_attendance(RecordFilter{s.session_id, std::nullopt, {}})) {
        slot->marked.insert(a.student_id);
        slot->present.push_back(a);
      }
      sessions_.emplace(s.session_id, std::move(slot));
    }
  }

  const MatcherConfig& matcher_config() const { return matcher_; }
  EnrollmentRegistry& registry() { return registry_; }
  const EnrollmentRegistry& registry() const { return registry_; }
  Store& store() { return store_; }
  const Store& store() const { return store_; }

  /// Registers a student with the matcher and the store.
  StudentProfile enroll_student(const std::string& student_id, const std::string& display_name,
                                const std::vector<double>& reference, TimestampMs enrolled_at = now_ms()) {
    std::lock_guard lock(enroll_mutex_);
    const Embedding embedding(reference);
    if (student_id.empty()) throw Error(ErrorCode::InvalidArgument, "student_id must be non-empty");
    if (registry_.contains(student_id)) throw Error(ErrorCode::DuplicateStudentId, student_id);
    StudentProfile profile{student_id, display_name, embedding, enrolled_at};
    store_.insert_student(profile);
    return registry_.enroll(student_id, display_name, embedding, enrolled_at);
  }

  Session start_session(const std::string& course_label, TimestampMs start_time) {
    Session s = store_.create_session(course_label, start_time);
    auto slot = std::make_unique<SessionSlot>();
    slot->info = s;
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(s.session_id, std::move(slot));
    return s;
  }

  Session end_session(const std::string& session_id, TimestampMs end_time) {
    SessionSlot& slot = slot_for(session_id);
    std::lock_guard lock(slot.mutex);
    if (slot.info.status == SessionStatus::Ended) throw Error(ErrorCode::AlreadyEnded, session_id);
    if (end_time < slot.info.started_at) {
      throw Error(ErrorCode::InvalidArgument, "end time precedes start time");
    }
    store_.mark_session_ended(session_id, end_time);
    slot.info.status = SessionStatus::Ended;
    slot.info.ended_at = end_time;
    return slot.info;
  }

  /// Routes one detection. Event-level failures (unknown or inactive session,
  /// bad embedding, timestamp outside the session) come back as a Rejected
  /// outcome carrying the reason; nothing is written for them.
  ProcessOutcome process_detection(const DetectionEvent& event) {
    ProcessOutcome out;
    std::optional<Embedding> probe;
    try {
      probe.emplace(event.embedding);
    } catch (const Error& e) {
      return rejected(e.code());
    }
    SessionSlot* slot = find_slot(event.session_id);
    if (slot == nullptr) return rejected(ErrorCode::UnknownSession);

    std::lock_guard lock(slot->mutex);
    if (slot->info.status != SessionStatus::Active) return rejected(ErrorCode::SessionNotActive);
    if (event.captured_at < slot->info.started_at) return rejected(ErrorCode::TimestampOutOfRange);

    const MatchResult match = registry_.match(*probe, matcher_);
    out.match = match;
    if (!match.matched) {
      store_.increment_unmatched(event.session_id);
      ++slot->info.unmatched_count;
      out.kind = OutcomeKind::UnmatchedIgnored;
      return out;
    }
    const std::string& student = *match.student_id;

    // Classify before writing anything so a bad crop leaves no partial rows.
    ClassifiedEmotion emotion;
    try {
      const auto prediction = classify_face(*classifier_, event.face_crop);
      emotion = ClassifiedEmotion{prediction.emotion, prediction.confidence};
    } catch (const Error& e) {
      out.kind = OutcomeKind::Rejected;
      out.reject_reason = e.code();
      return out;
    }

    out.kind = OutcomeKind::AttendanceSkippedEmotionLogged;
    if (!slot->marked.contains(student)) {
      const AttendanceRecord record{student, event.session_id, event.captured_at, match.confidence};
      if (store_.insert_attendance(record) == InsertOutcome::Inserted) {
        slot->present.push_back(record);
        out.kind = OutcomeKind::AttendanceMarked;
      }
      slot->marked.insert(student);
    }
    store_.insert_emotion(
        EmotionObservation{student, event.session_id, emotion.emotion, emotion.confidence, event.captured_at});
    out.emotion = emotion;
    return out;
  }

  SessionSnapshot session_snapshot(const std::string& session_id) const {
    const SessionSlot& slot = slot_for(session_id);
    std::lock_guard lock(slot.mutex);
    SessionSnapshot snap;
    snap.session = slot.info;
    snap.unmatched_count = slot.info.unmatched_count;
    for (const auto& r : slot.present) {
      const auto profile = registry_.find(r.student_id);
      snap.present.push_back(
          PresentStudent{r.student_id, profile ? profile->display_name : std::string(), r.timestamp, r.confidence});
    }
    std::sort(snap.present.begin(), snap.present.end(), [](const PresentStudent& a, const PresentStudent& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.student_id < b.student_id;
    });
    return snap;
  }

  /// Attendance flag for every enrolled student (0 = not yet seen).
  std::map<std::string, int> attendance_flags(const std::string& session_id) const {
    const SessionSlot& slot = slot_for(session_id);
    std::lock_guard lock(slot.mutex);
    std::map<std::string, int> flags;
    for (const auto& p : registry_.list()) flags[p.student_id] = slot.marked.contains(p.student_id) ? 1 : 0;
    return flags;
  }

  std::optional<Session> find_session(const std::string& session_id) const {
    const SessionSlot* slot = find_slot(session_id);
    if (slot == nullptr) return std::nullopt;
    std::lock_guard lock(slot->mutex);
    return slot->info;
  }

  Session session(const std::string& session_id) const {
    auto s = find_session(session_id);
    if (!s) throw Error(ErrorCode::UnknownSession, session_id);
    return *s;
  }

  /// Sessions in creation order.
  std::vector<Session> sessions() const {
    std::vector<Session> out;
    for (const auto& s : store_.sessions()) {
      if (auto live = find_session(s.session_id)) out.push_back(*live);
    }
    return out;
  }

 private:
  struct SessionSlot {
    Session info;
    std::set<std::string> marked;
    std::vector<AttendanceRecord> present;
    mutable std::mutex mutex;
  };

  static ProcessOutcome rejected(ErrorCode reason) {
    ProcessOutcome out;
    out.kind = OutcomeKind::Rejected;
    out.reject_reason = reason;
    return out;
  }

  /// Makes the registry and the students table agree before any event runs.
  void sync_students() {
    for (const auto& p : store_.students()) {
      if (!registry_.contains(p.student_id)) {
        registry_.enroll(p.student_id, p.display_name, p.reference_embedding, p.enrolled_at);
      }
    }
    for (const auto& p : registry_.list()) {
      if (!store_.has_student(p.student_id)) store_.insert_student(p);
    }
  }

  SessionSlot* find_slot(const std::string& session_id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    return it == sessions_.end() ? nullptr : it->second.get();
  }

  SessionSlot& slot_for(const std::string& session_id) const {
    SessionSlot* slot = find_slot(session_id);
    if (slot == nullptr) throw Error(ErrorCode::UnknownSession, session_id);
    return *slot;
  }

  Store& store_;
  EnrollmentRegistry& registry_;
  std::shared_ptr<const EmotionClassifier> classifier_;
  MatcherConfig matcher_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<SessionSlot>> sessions_;
  std::mutex enroll_mutex_;
};

}  // namespace classroom
