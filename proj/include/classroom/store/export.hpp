#pragma once

#include <json.hpp>

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "classroom/error.hpp"
#include "classroom/store/store.hpp"

namespace classroom {

/// Newline-delimited export, one entity per line, each a JSON array whose
/// first element names the record type:
///
///   ["student", student_id, display_name, enrolled_at, [128 embedding values]]
///   ["session", session_id, course_label, started_at, ended_at|null, status, unmatched_count]
///   ["attendance", student_id, session_id, timestamp, confidence]
///   ["emotion", student_id, session_id, emotion_label, confidence, timestamp]
///
/// Lines appear in that type order: students by id, sessions in creation
/// order, attendance by session then timestamp, emotions in insertion order.
inline void export_store(const Store& store, std::ostream& out) {
  using nlohmann::json;
  for (const auto& s : store.students()) {
    const auto v = s.reference_embedding.values();
    out << json::array({"student", s.student_id, s.display_name, s.enrolled_at,
                        std::vector<double>(v.begin(), v.end())})
               .dump()
        << '\n';
  }
  for (const auto& s : store.sessions()) {
    out << json::array({"session", s.session_id, s.course_label, s.started_at,
                        s.ended_at ? json(*s.ended_at) : json(nullptr), std::string(to_string(s.status)),
                        s.unmatched_count})
               .dump()
        << '\n';
  }
  for (const auto& a : store.all_attendance()) {
    out << json::array({"attendance", a.student_id, a.session_id, a.timestamp, a.confidence}).dump() << '\n';
  }
  for (const auto& e : store.all_emotions()) {
    out << json::array({"emotion", e.student_id, e.session_id, std::string(label_of(e.emotion)), e.confidence,
                        e.timestamp})
               .dump()
        << '\n';
  }
}

/// Replays an export into `store` (normally empty). Lines must respect the
/// type order above so that references resolve.
inline void import_store(Store& store, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fail = [&](const std::string& what) {
      return Error(ErrorCode::MalformedPayload, "line " + std::to_string(line_no) + ": " + what);
    };
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_array() || j.empty() || !j[0].is_string()) throw fail("not a record array");
    const auto kind = j[0].get<std::string>();
    try {
      if (kind == "student" && j.size() == 5) {
        store.insert_student(StudentProfile{j[1].get<std::string>(), j[2].get<std::string>(),
                                            Embedding(j[4].get<std::vector<double>>()), j[3].get<TimestampMs>()});
      } else if (kind == "session" && j.size() == 7) {
        Session s;
        s.session_id = j[1].get<std::string>();
        s.course_label = j[2].get<std::string>();
        s.started_at = j[3].get<TimestampMs>();
        if (!j[4].is_null()) s.ended_at = j[4].get<TimestampMs>();
        s.status = j[5].get<std::string>() == "ended" ? SessionStatus::Ended : SessionStatus::Active;
        s.unmatched_count = j[6].get<std::size_t>();
        store.insert_session(s);
      } else if (kind == "attendance" && j.size() == 5) {
        store.insert_attendance(AttendanceRecord{j[1].get<std::string>(), j[2].get<std::string>(),
                                                 j[3].get<TimestampMs>(), j[4].get<double>()});
      } else if (kind == "emotion" && j.size() == 6) {
        store.insert_emotion(j[1].get<std::string>(), j[2].get<std::string>(), j[3].get<std::string>(),
                             j[4].get<double>(), j[5].get<TimestampMs>());
      } else {
        throw fail("unknown record '" + kind + "' or wrong field count");
      }
    } catch (const nlohmann::json::exception& e) {
      throw fail(e.what());
    }
  }
}

}  // namespace classroom
