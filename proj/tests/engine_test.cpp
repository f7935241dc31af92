#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <thread>

#include "classroom/session/engine.hpp"
#include "support/fakes.hpp"

using namespace classroom;
using test_support::crop_for;
using test_support::student_embedding;

namespace {

template <typename F>
ErrorCode error_of(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

struct Rig {
  Store store;
  EnrollmentRegistry registry;
  SessionEngine engine;

  explicit Rig(std::size_t students = 3)
      : engine(store, registry, std::make_shared<test_support::BrightnessClassifier>()) {
    for (std::size_t k = 0; k < students; ++k) {
      engine.enroll_student(id(k), "Student " + std::to_string(k + 1), student_embedding(k), 0);
    }
  }

  static std::string id(std::size_t k) { return "s" + std::to_string(k + 1); }

  ProcessOutcome see(const std::string& session, std::size_t k, TimestampMs at,
                     EmotionClass emotion = EmotionClass::Engagement) {
    return engine.process_detection(DetectionEvent{session, at, student_embedding(k), crop_for(emotion), "cam"});
  }
};

std::vector<double> far_from_everyone() { return test_support::axis_embedding(-5.0, 100); }

}  // namespace

TEST(StartSession, FreshSessionIsActiveAndEmpty) {
  Rig rig;
  const auto s = rig.engine.start_session("CS101", 1000);
  EXPECT_EQ(s.status, SessionStatus::Active);
  EXPECT_EQ(s.unmatched_count, 0u);
  EXPECT_EQ(rig.store.count_attendance(s.session_id), 0u);
  const auto flags = rig.engine.attendance_flags(s.session_id);
  ASSERT_EQ(flags.size(), 3u);
  for (const auto& [id, flag] : flags) EXPECT_EQ(flag, 0) << id;
}

TEST(StartSession, TwoStartsHaveDistinctIds) {
  Rig rig;
  EXPECT_NE(rig.engine.start_session("a", 0).session_id, rig.engine.start_session("b", 0).session_id);
}

TEST(EndSession, EndsThenRejectsDetectionsAndSecondEnd) {
  Rig rig;
  const auto s = rig.engine.start_session("CS101", 1000);
  const auto ended = rig.engine.end_session(s.session_id, 2000);
  EXPECT_EQ(ended.status, SessionStatus::Ended);
  EXPECT_EQ(ended.ended_at, 2000);
  const auto out = rig.see(s.session_id, 0, 1500);
  EXPECT_EQ(out.kind, OutcomeKind::Rejected);
  EXPECT_EQ(out.reject_reason, ErrorCode::SessionNotActive);
  EXPECT_EQ(rig.store.count_attendance(), 0u);
  EXPECT_EQ(rig.store.count_emotions(), 0u);
  EXPECT_EQ(error_of([&] { rig.engine.end_session(s.session_id, 3000); }), ErrorCode::AlreadyEnded);
  EXPECT_EQ(error_of([&] { rig.engine.end_session("session-404", 3000); }), ErrorCode::UnknownSession);
}

TEST(ProcessDetection, FirstSightingMarksAttendanceOnce) {
  Rig rig;
  const auto s = rig.engine.start_session("CS101", 1000);
  const auto first = rig.see(s.session_id, 1, 1234, EmotionClass::Confusion);
  EXPECT_EQ(first.kind, OutcomeKind::AttendanceMarked);
  ASSERT_TRUE(first.emotion.has_value());
  EXPECT_EQ(first.emotion->emotion, EmotionClass::Confusion);
  EXPECT_DOUBLE_EQ(first.emotion->confidence, 0.7);
  const auto rows = rig.store.query_attendance({s.session_id, std::nullopt, {}});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].student_id, "s2");
  EXPECT_EQ(rows[0].timestamp, 1234);
  EXPECT_EQ(rows[0].confidence, 1.0);
  EXPECT_EQ(rig.store.count_emotions(s.session_id), 1u);
}

TEST(ProcessDetection, SecondSightingLogsEmotionOnly) {
  Rig rig;
  const auto s = rig.engine.start_session("CS101", 1000);
  ASSERT_EQ(rig.see(s.session_id, 0, 1100).kind, OutcomeKind::AttendanceMarked);
  const auto second = rig.see(s.session_id, 0, 3100, EmotionClass::Frustration);
  EXPECT_EQ(second.kind, OutcomeKind::AttendanceSkippedEmotionLogged);
  EXPECT_EQ(rig.store.count_attendance(s.session_id), 1u);
  EXPECT_EQ(rig.store.count_emotions(s.session_id), 2u);
  const auto rows = rig.store.query_attendance({s.session_id, std::nullopt, {}});
  EXPECT_EQ(rows[0].timestamp, 1100);
  const auto emotions = rig.store.query_emotions({s.session_id, "s1", {}});
  ASSERT_EQ(emotions.size(), 2u);
  EXPECT_EQ(emotions[1].emotion, EmotionClass::Frustration);
}

TEST(ProcessDetection, FarEmbeddingIsUnmatchedAndWritesNoRows) {
  Rig rig;
  const auto s = rig.engine.start_session("CS101", 1000);
  const auto out =
      rig.engine.process_detection(DetectionEvent{s.session_id, 1100, far_from_everyone(), crop_for({}), "cam"});
  EXPECT_EQ(out.kind, OutcomeKind::UnmatchedIgnored);
  ASSERT_TRUE(out.match.has_value());
  EXPECT_FALSE(out.match->matched);
  EXPECT_EQ(rig.store.count_attendance(), 0u);
  EXPECT_EQ(rig.store.count_emotions(), 0u);
  EXPECT_EQ(rig.engine.session_snapshot(s.session_id).unmatched_count, 1u);
  EXPECT_EQ(rig.store.find_session(s.session_id)->unmatched_count, 1u);
}

TEST(ProcessDetection, EventLevelFailuresAreRejectedWithoutWrites) {
  Rig rig;
  const auto s = rig.engine.start_session("CS101", 1000);
  auto out = rig.engine.process_detection(
      DetectionEvent{s.session_id, 1100, std::vector<double>(127, 0.0), crop_for({}), "cam"});
  EXPECT_EQ(out.reject_reason, ErrorCode::InvalidEmbedding);
  out = rig.engine.process_detection(DetectionEvent{"session-404", 1100, student_embedding(0), crop_for({}), "cam"});
  EXPECT_EQ(out.reject_reason, ErrorCode::UnknownSession);
  out = rig.see(s.session_id, 0, 999);
  EXPECT_EQ(out.reject_reason, ErrorCode::TimestampOutOfRange);
  out = rig.engine.process_detection(DetectionEvent{s.session_id, 1100, student_embedding(0), RawImage{}, "cam"});
  EXPECT_EQ(out.kind, OutcomeKind::Rejected);
  EXPECT_EQ(out.reject_reason, ErrorCode::EmptyImage);
  EXPECT_EQ(rig.store.count_attendance(), 0u);
  EXPECT_EQ(rig.store.count_emotions(), 0u);
  EXPECT_EQ(rig.engine.attendance_flags(s.session_id).at("s1"), 0);
}

TEST(Snapshot, EmptySessionHasNoStudents) {
  Rig rig;
  const auto s = rig.engine.start_session("CS101", 0);
  EXPECT_TRUE(rig.engine.session_snapshot(s.session_id).present.empty());
  EXPECT_EQ(error_of([&] { (void)rig.engine.session_snapshot("nope"); }), ErrorCode::UnknownSession);
}

TEST(Snapshot, ListsEachMarkedStudentOnce) {
  Rig rig(5);
  const auto s = rig.engine.start_session("CS101", 0);
  for (std::size_t k : {3u, 1u, 3u, 4u, 1u}) rig.see(s.session_id, k, 100);
  EXPECT_EQ(rig.engine.session_snapshot(s.session_id).present.size(), 3u);
}

TEST(Snapshot, ReplayedTraceMatchesOracle) {
  Rig rig;
  const auto s = rig.engine.start_session("CS101", 1000);
  // (student index or -1 for a stranger, timestamp)
  const std::vector<std::pair<int, TimestampMs>> trace{{2, 1000}, {-1, 1000}, {2, 3000}, {0, 3000},
                                                       {-1, 5000}, {0, 5000}, {1, 7000}, {2, 7000}};
  std::map<std::string, TimestampMs> first_seen;
  std::size_t strangers = 0;
  for (const auto& [k, at] : trace) {
    if (k < 0) {
      rig.engine.process_detection(DetectionEvent{s.session_id, at, far_from_everyone(), crop_for({}), "cam"});
      ++strangers;
      continue;
    }
    rig.see(s.session_id, static_cast<std::size_t>(k), at);
    first_seen.emplace(Rig::id(static_cast<std::size_t>(k)), at);
  }
  std::vector<std::pair<TimestampMs, std::string>> oracle;
  for (const auto& [id, at] : first_seen) oracle.emplace_back(at, id);
  std::sort(oracle.begin(), oracle.end());

  const auto snap = rig.engine.session_snapshot(s.session_id);
  ASSERT_EQ(snap.present.size(), oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    EXPECT_EQ(snap.present[i].timestamp, oracle[i].first);
    EXPECT_EQ(snap.present[i].student_id, oracle[i].second);
    EXPECT_EQ(snap.present[i].confidence, 1.0);
  }
  EXPECT_EQ(snap.unmatched_count, strangers);
}

TEST(Engine, RestartDoesNotRemarkAttendance) {
  Store store;
  EnrollmentRegistry registry;
  std::string session_id;
  {
    SessionEngine engine(store, registry, std::make_shared<test_support::BrightnessClassifier>());
    engine.enroll_student("s1", "Ada", student_embedding(0), 0);
    session_id = engine.start_session("CS101", 0).session_id;
    engine.process_detection(DetectionEvent{session_id, 10, student_embedding(0), crop_for({}), "cam"});
  }
  EnrollmentRegistry fresh;
  SessionEngine restarted(store, fresh, std::make_shared<test_support::BrightnessClassifier>());
  EXPECT_TRUE(fresh.contains("s1"));
  EXPECT_EQ(restarted.attendance_flags(session_id).at("s1"), 1);
  const auto out =
      restarted.process_detection(DetectionEvent{session_id, 20, student_embedding(0), crop_for({}), "cam"});
  EXPECT_EQ(out.kind, OutcomeKind::AttendanceSkippedEmotionLogged);
  EXPECT_EQ(store.count_attendance(), 1u);
}

TEST(Engine, RandomEventFuzzKeepsInvariants) {
  Rig rig(20);
  std::vector<std::string> sessions;
  for (int i = 0; i < 3; ++i) sessions.push_back(rig.engine.start_session("c" + std::to_string(i), 0).session_id);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> jitter(0.0, 0.02);
  std::map<std::pair<std::string, std::string>, std::size_t> matched, marked;
  std::map<std::string, std::map<std::string, int>> last_flags;
  std::set<std::string> ended;
  std::size_t ended_at_counts_attendance = 0, ended_at_counts_emotions = 0;
  const std::string late_end = sessions[2];

  for (int i = 0; i < 10000; ++i) {
    if (i == 6000) {
      rig.engine.end_session(late_end, 1);
      ended.insert(late_end);
      ended_at_counts_attendance = rig.store.count_attendance(late_end);
      ended_at_counts_emotions = rig.store.count_emotions(late_end);
    }
    const auto& session = sessions[rng() % sessions.size()];
    const bool stranger = rng() % 10 == 0;
    std::vector<double> e;
    std::size_t k = rng() % 20;
    if (stranger) {
      e = far_from_everyone();
    } else {
      e = student_embedding(k);
      for (double& x : e) x += jitter(rng);
    }
    const auto out = rig.engine.process_detection(
        DetectionEvent{session, static_cast<TimestampMs>(i), e, crop_for(static_cast<EmotionClass>(rng() % 4)), "f"});
    if (ended.contains(session)) {
      ASSERT_EQ(out.kind, OutcomeKind::Rejected);
      continue;
    }
    if (out.kind == OutcomeKind::AttendanceMarked || out.kind == OutcomeKind::AttendanceSkippedEmotionLogged) {
      ASSERT_FALSE(stranger);
      ASSERT_EQ(out.match->student_id, Rig::id(k));
      ++matched[{Rig::id(k), session}];
      if (out.kind == OutcomeKind::AttendanceMarked) ++marked[{Rig::id(k), session}];
      ASSERT_TRUE(out.emotion.has_value());
    }
    if (i % 500 == 0) {
      for (const auto& s : sessions) {
        const auto flags = rig.engine.attendance_flags(s);
        for (const auto& [id, flag] : last_flags[s]) ASSERT_GE(flags.at(id), flag) << "flag cleared for " << id;
        last_flags[s] = flags;
      }
    }
  }

  for (const auto& s : sessions) {
    const auto attendance = rig.store.query_attendance({s, std::nullopt, {}});
    std::set<std::string> ids;
    for (const auto& a : attendance) EXPECT_TRUE(ids.insert(a.student_id).second) << a.student_id << " twice in " << s;
    for (std::size_t k = 0; k < 20; ++k) {
      const auto key = std::make_pair(Rig::id(k), s);
      EXPECT_EQ(rig.store.query_emotions({s, Rig::id(k), {}}).size(), matched[key]);
      EXPECT_EQ(marked[key], ids.contains(Rig::id(k)) ? 1u : 0u);
    }
  }
  EXPECT_EQ(rig.store.count_attendance(late_end), ended_at_counts_attendance);
  EXPECT_EQ(rig.store.count_emotions(late_end), ended_at_counts_emotions);
}

TEST(Engine, ConcurrentDetectionsMarkEachStudentOnce) {
  Rig rig(8);
  const auto s = rig.engine.start_session("CS101", 0);
  std::vector<std::thread> threads;
  std::atomic<int> marked{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        const auto out = rig.see(s.session_id, static_cast<std::size_t>((i + t) % 8), i);
        if (out.kind == OutcomeKind::AttendanceMarked) ++marked;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(marked.load(), 8);
  EXPECT_EQ(rig.store.count_attendance(s.session_id), 8u);
  EXPECT_EQ(rig.store.count_emotions(s.session_id), 200u);
}
