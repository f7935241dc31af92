#pragma once

#include <cstring>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "classroom/error.hpp"
#include "classroom/identity/registry.hpp"
#include "classroom/store/records.hpp"
#include "classroom/store/sqlite.hpp"

namespace classroom {

/// Durable store over an embedded SQLite database.
///
/// Tables: students, sessions, attendance (UNIQUE(student_id, session_id)),
/// emotions (append-only). Foreign keys are enforced. A single connection is
/// shared under a mutex, so every call is one linearizable step and readers
/// only ever observe committed rows. Pass ":memory:" for a throwaway store.
class Store {
 public:
  explicit Store(const std::string& path = ":memory:") : path_(path), conn_(path) {
    conn_.exec("PRAGMA foreign_keys = ON");
    if (path != ":memory:") {
      conn_.exec("PRAGMA journal_mode = WAL");
      conn_.exec("PRAGMA synchronous = NORMAL");
    }
    conn_.exec(R"sql(
      CREATE TABLE IF NOT EXISTS students (
        student_id   TEXT PRIMARY KEY NOT NULL CHECK (length(student_id) > 0),
        display_name TEXT NOT NULL,
        enrolled_at  INTEGER NOT NULL,
        embedding    BLOB NOT NULL
      );
      CREATE TABLE IF NOT EXISTS sessions (
        seq             INTEGER PRIMARY KEY AUTOINCREMENT,
        session_id      TEXT NOT NULL UNIQUE,
        course_label    TEXT NOT NULL,
        started_at      INTEGER NOT NULL,
        ended_at        INTEGER,
        status          TEXT NOT NULL CHECK (status IN ('active', 'ended')),
        unmatched_count INTEGER NOT NULL DEFAULT 0
      );
      CREATE TABLE IF NOT EXISTS attendance (
        student_id TEXT NOT NULL REFERENCES students(student_id),
        session_id TEXT NOT NULL REFERENCES sessions(session_id),
        timestamp  INTEGER NOT NULL,
        confidence REAL NOT NULL,
        UNIQUE (student_id, session_id)
      );
      CREATE TABLE IF NOT EXISTS emotions (
        id         INTEGER PRIMARY KEY AUTOINCREMENT,
        student_id TEXT NOT NULL REFERENCES students(student_id),
        session_id TEXT NOT NULL REFERENCES sessions(session_id),
        emotion    TEXT NOT NULL
                   CHECK (emotion IN ('boredom', 'confusion', 'engagement', 'frustration')),
        confidence REAL NOT NULL,
        timestamp  INTEGER NOT NULL
      );
      CREATE INDEX IF NOT EXISTS attendance_by_session ON attendance(session_id, timestamp);
      CREATE INDEX IF NOT EXISTS emotions_by_session ON emotions(session_id, timestamp);
    )sql");
  }

  const std::string& path() const { return path_; }

  // -- students ------------------------------------------------------------

  void insert_student(const StudentProfile& profile) {
    std::lock_guard lock(mutex_);
    const auto values = profile.reference_embedding.values();
    sqlite::Statement st(conn_,
                         "INSERT INTO students (student_id, display_name, enrolled_at, embedding) "
                         "VALUES (?1, ?2, ?3, ?4)");
    st.bind(1, profile.student_id)
        .bind(2, profile.display_name)
        .bind(3, static_cast<std::int64_t>(profile.enrolled_at))
        .bind_blob(4, std::as_bytes(std::span<const double>(values.data(), values.size())));
    const int rc = st.execute();
    if (rc == SQLITE_CONSTRAINT_PRIMARYKEY || rc == SQLITE_CONSTRAINT_UNIQUE) {
      throw Error(ErrorCode::DuplicateStudentId, profile.student_id);
    }
    if (rc != SQLITE_OK) throw Error(ErrorCode::StorageFailure, sqlite3_errmsg(conn_.get()));
  }

  std::vector<StudentProfile> students() const {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_,
                         "SELECT student_id, display_name, enrolled_at, embedding FROM students "
                         "ORDER BY student_id");
    std::vector<StudentProfile> out;
    while (st.step()) {
      const auto blob = st.column_blob(3);
      if (blob.size() != kEmbeddingDim * sizeof(double)) {
        throw Error(ErrorCode::StorageFailure, "corrupt embedding for " + st.column_text(0));
      }
      std::vector<double> values(kEmbeddingDim);
      std::memcpy(values.data(), blob.data(), blob.size());
      out.push_back(StudentProfile{st.column_text(0), st.column_text(1), Embedding(values), st.column_int(2)});
    }
    return out;
  }

  bool has_student(const std::string& student_id) const {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_, "SELECT 1 FROM students WHERE student_id = ?1");
    st.bind(1, student_id);
    return st.step();
  }

  // -- sessions ------------------------------------------------------------

  /// Creates an active session with the next sequential id ("session-<n>").
  Session create_session(const std::string& course_label, TimestampMs started_at) {
    std::lock_guard lock(mutex_);
    std::int64_t next = 1;
    {
      sqlite::Statement st(conn_, "SELECT COALESCE(MAX(seq), 0) + 1 FROM sessions");
      if (st.step()) next = st.column_int(0);
    }
    Session s;
    s.session_id = "session-" + std::to_string(next);
    s.course_label = course_label;
    s.started_at = started_at;
    insert_session_locked(s);
    return s;
  }

  /// Inserts a session with a caller-chosen id (used by import).
  void insert_session(const Session& s) {
    std::lock_guard lock(mutex_);
    insert_session_locked(s);
  }

  void mark_session_ended(const std::string& session_id, TimestampMs ended_at) {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_,
                         "UPDATE sessions SET status = 'ended', ended_at = ?2 "
                         "WHERE session_id = ?1 AND status = 'active'");
    st.bind(1, session_id).bind(2, static_cast<std::int64_t>(ended_at));
    if (st.execute() != SQLITE_OK) throw Error(ErrorCode::StorageFailure, sqlite3_errmsg(conn_.get()));
  }

  void increment_unmatched(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_,
                         "UPDATE sessions SET unmatched_count = unmatched_count + 1 WHERE session_id = ?1");
    st.bind(1, session_id);
    if (st.execute() != SQLITE_OK) throw Error(ErrorCode::StorageFailure, sqlite3_errmsg(conn_.get()));
  }

  std::optional<Session> find_session(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_, std::string(kSessionColumns) + " WHERE session_id = ?1");
    st.bind(1, session_id);
    if (!st.step()) return std::nullopt;
    return read_session(st);
  }

  /// All sessions in creation order.
  std::vector<Session> sessions() const {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_, std::string(kSessionColumns) + " ORDER BY seq");
    std::vector<Session> out;
    while (st.step()) out.push_back(read_session(st));
    return out;
  }

  // -- records -------------------------------------------------------------

  /// At most one row per (student, session). A repeat leaves the first row
  /// untouched and reports DuplicateRejected.
  InsertOutcome insert_attendance(const AttendanceRecord& r) {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_,
                         "INSERT INTO attendance (student_id, session_id, timestamp, confidence) "
                         "VALUES (?1, ?2, ?3, ?4)");
    st.bind(1, r.student_id).bind(2, r.session_id).bind(3, static_cast<std::int64_t>(r.timestamp)).bind(4, r.confidence);
    const int rc = st.execute();
    if (rc == SQLITE_OK) return InsertOutcome::Inserted;
    if (rc == SQLITE_CONSTRAINT_UNIQUE) return InsertOutcome::DuplicateRejected;
    if (rc == SQLITE_CONSTRAINT_FOREIGNKEY) {
      throw Error(ErrorCode::ForeignKeyViolation, "attendance for " + r.student_id + "/" + r.session_id);
    }
    throw Error(ErrorCode::StorageFailure, sqlite3_errmsg(conn_.get()));
  }

  void insert_emotion(const EmotionObservation& o) {
    const int code = code_of(o.emotion);
    if (code < 0 || code >= static_cast<int>(kNumEmotions)) {
      throw Error(ErrorCode::InvalidLabel, "emotion code " + std::to_string(code));
    }
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_,
                         "INSERT INTO emotions (student_id, session_id, emotion, confidence, timestamp) "
                         "VALUES (?1, ?2, ?3, ?4, ?5)");
    st.bind(1, o.student_id)
        .bind(2, o.session_id)
        .bind(3, std::string(label_of(o.emotion)))
        .bind(4, o.confidence)
        .bind(5, static_cast<std::int64_t>(o.timestamp));
    const int rc = st.execute();
    if (rc == SQLITE_OK) return;
    if (rc == SQLITE_CONSTRAINT_FOREIGNKEY) {
      throw Error(ErrorCode::ForeignKeyViolation, "emotion for " + o.student_id + "/" + o.session_id);
    }
    if (rc == SQLITE_CONSTRAINT_CHECK) throw Error(ErrorCode::InvalidLabel, "emotion label rejected");
    throw Error(ErrorCode::StorageFailure, sqlite3_errmsg(conn_.get()));
  }

  /// Label-based insert; unknown labels are InvalidLabel.
  void insert_emotion(const std::string& student_id, const std::string& session_id, std::string_view label,
                      double confidence, TimestampMs timestamp) {
    insert_emotion(EmotionObservation{student_id, session_id, parse_emotion(label), confidence, timestamp});
  }

  /// Ordered by (timestamp, student_id).
  std::vector<AttendanceRecord> query_attendance(const RecordFilter& filter) const {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_, std::string("SELECT student_id, session_id, timestamp, confidence FROM attendance") +
                                    kFilterClause + " ORDER BY timestamp, student_id, rowid");
    bind_filter(st, filter);
    std::vector<AttendanceRecord> out;
    while (st.step()) {
      out.push_back(AttendanceRecord{st.column_text(0), st.column_text(1), st.column_int(2), st.column_double(3)});
    }
    return out;
  }

  /// Ordered by (timestamp, student_id), then insertion order.
  std::vector<EmotionObservation> query_emotions(const RecordFilter& filter) const {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_,
                         std::string("SELECT student_id, session_id, emotion, confidence, timestamp FROM emotions") +
                             kFilterClause + " ORDER BY timestamp, student_id, id");
    bind_filter(st, filter);
    std::vector<EmotionObservation> out;
    while (st.step()) {
      out.push_back(EmotionObservation{st.column_text(0), st.column_text(1), parse_emotion(st.column_text(2)),
                                       st.column_double(3), st.column_int(4)});
    }
    return out;
  }

  /// Every emotion row in insertion order (export).
  std::vector<EmotionObservation> all_emotions() const {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_,
                         "SELECT student_id, session_id, emotion, confidence, timestamp FROM emotions ORDER BY id");
    std::vector<EmotionObservation> out;
    while (st.step()) {
      out.push_back(EmotionObservation{st.column_text(0), st.column_text(1), parse_emotion(st.column_text(2)),
                                       st.column_double(3), st.column_int(4)});
    }
    return out;
  }

  std::vector<AttendanceRecord> all_attendance() const {
    std::lock_guard lock(mutex_);
    sqlite::Statement st(conn_,
                         "SELECT a.student_id, a.session_id, a.timestamp, a.confidence FROM attendance a "
                         "JOIN sessions s ON s.session_id = a.session_id "
                         "ORDER BY s.seq, a.timestamp, a.student_id");
    std::vector<AttendanceRecord> out;
    while (st.step()) {
      out.push_back(AttendanceRecord{st.column_text(0), st.column_text(1), st.column_int(2), st.column_double(3)});
    }
    return out;
  }

  std::size_t count_attendance(const std::optional<std::string>& session_id = std::nullopt) const {
    return count("attendance", session_id);
  }
  std::size_t count_emotions(const std::optional<std::string>& session_id = std::nullopt) const {
    return count("emotions", session_id);
  }

 private:
  static constexpr const char* kSessionColumns =
      "SELECT session_id, course_label, started_at, ended_at, status, unmatched_count FROM sessions";
  static constexpr const char* kFilterClause =
      " WHERE session_id = ?1 AND (?2 IS NULL OR student_id = ?2) AND (?3 IS NULL OR timestamp >= ?3) "
      "AND (?4 IS NULL OR timestamp < ?4)";

  static void bind_filter(sqlite::Statement& st, const RecordFilter& f) {
    st.bind(1, f.session_id);
    if (f.student_id) st.bind(2, *f.student_id); else st.bind_null(2);
    if (f.range.begin) st.bind(3, static_cast<std::int64_t>(*f.range.begin)); else st.bind_null(3);
    if (f.range.end) st.bind(4, static_cast<std::int64_t>(*f.range.end)); else st.bind_null(4);
  }

  static Session read_session(const sqlite::Statement& st) {
    Session s;
    s.session_id = st.column_text(0);
    s.course_label = st.column_text(1);
    s.started_at = st.column_int(2);
    if (!st.column_is_null(3)) s.ended_at = st.column_int(3);
    s.status = st.column_text(4) == "ended" ? SessionStatus::Ended : SessionStatus::Active;
    s.unmatched_count = static_cast<std::size_t>(st.column_int(5));
    return s;
  }

  void insert_session_locked(const Session& s) {
    sqlite::Statement st(conn_,
                         "INSERT INTO sessions (session_id, course_label, started_at, ended_at, status, "
                         "unmatched_count) VALUES (?1, ?2, ?3, ?4, ?5, ?6)");
    st.bind(1, s.session_id).bind(2, s.course_label).bind(3, static_cast<std::int64_t>(s.started_at));
    if (s.ended_at) st.bind(4, static_cast<std::int64_t>(*s.ended_at)); else st.bind_null(4);
    st.bind(5, std::string(to_string(s.status))).bind(6, static_cast<std::int64_t>(s.unmatched_count));
    const int rc = st.execute();
    if (rc == SQLITE_CONSTRAINT_UNIQUE) throw Error(ErrorCode::InvalidArgument, "session exists: " + s.session_id);
    if (rc != SQLITE_OK) throw Error(ErrorCode::StorageFailure, sqlite3_errmsg(conn_.get()));
  }

  std::size_t count(const char* table, const std::optional<std::string>& session_id) const {
    std::lock_guard lock(mutex_);
    std::string sql = std::string("SELECT COUNT(*) FROM ") + table;
    if (session_id) sql += " WHERE session_id = ?1";
    sqlite::Statement st(conn_, sql);
    if (session_id) st.bind(1, *session_id);
    st.step();
    return static_cast<std::size_t>(st.column_int(0));
  }

  std::string path_;
  sqlite::Connection conn_;
  mutable std::mutex mutex_;
};

}  // namespace classroom
