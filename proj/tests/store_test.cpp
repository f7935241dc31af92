#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "classroom/store/export.hpp"
#include "classroom/store/store.hpp"
#include "support/fakes.hpp"

using namespace classroom;
using test_support::profile;

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

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("classroom-store-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Two students and one session, ready for record inserts.
struct Seeded {
  Store store;
  Session session;

  explicit Seeded(const std::string& path = ":memory:") : store(path) {
    store.insert_student(profile("s1", 0));
    store.insert_student(profile("s2", 1));
    session = store.create_session("CS101", 1000);
  }
};

}  // namespace

TEST(Store, FreshAttendanceKeyIsInserted) {
  Seeded db;
  EXPECT_EQ(db.store.count_attendance(), 0u);
  EXPECT_EQ(db.store.insert_attendance({"s1", db.session.session_id, 1500, 0.91}), InsertOutcome::Inserted);
  EXPECT_EQ(db.store.count_attendance(), 1u);
}

TEST(Store, DuplicateAttendanceKeepsOriginalRow) {
  Seeded db;
  const AttendanceRecord first{"s1", db.session.session_id, 1500, 0.91};
  ASSERT_EQ(db.store.insert_attendance(first), InsertOutcome::Inserted);
  EXPECT_EQ(db.store.insert_attendance({"s1", db.session.session_id, 9000, 0.5}), InsertOutcome::DuplicateRejected);
  EXPECT_EQ(db.store.count_attendance(), 1u);
  const auto rows = db.store.query_attendance({db.session.session_id, std::nullopt, {}});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], first);
}

TEST(Store, UnknownSessionOrStudentViolatesForeignKey) {
  Seeded db;
  EXPECT_EQ(error_of([&] { (void)db.store.insert_attendance({"s1", "nope", 1, 0.9}); }),
            ErrorCode::ForeignKeyViolation);
  EXPECT_EQ(error_of([&] { (void)db.store.insert_attendance({"ghost", db.session.session_id, 1, 0.9}); }),
            ErrorCode::ForeignKeyViolation);
  EXPECT_EQ(error_of([&] {
              db.store.insert_emotion({"ghost", db.session.session_id, EmotionClass::Boredom, 0.5, 1});
            }),
            ErrorCode::ForeignKeyViolation);
  EXPECT_EQ(db.store.count_attendance(), 0u);
  EXPECT_EQ(db.store.count_emotions(), 0u);
}

TEST(Store, DuplicateStudentRejected) {
  Seeded db;
  EXPECT_EQ(error_of([&] { db.store.insert_student(profile("s1", 5)); }), ErrorCode::DuplicateStudentId);
}

TEST(Store, SessionsGetDistinctIds) {
  Seeded db;
  const auto other = db.store.create_session("CS102", 2000);
  EXPECT_NE(other.session_id, db.session.session_id);
  EXPECT_EQ(db.store.sessions().size(), 2u);
  EXPECT_EQ(other.status, SessionStatus::Active);
  EXPECT_EQ(other.unmatched_count, 0u);
}

TEST(Store, EmotionsHaveNoUniqueness) {
  Seeded db;
  for (int i = 0; i < 5; ++i) {
    db.store.insert_emotion({"s1", db.session.session_id, EmotionClass::Engagement, 0.8, 1000 + i});
  }
  EXPECT_EQ(db.store.count_emotions(db.session.session_id), 5u);
}

TEST(Store, UnknownEmotionLabelRejected) {
  Seeded db;
  EXPECT_EQ(error_of([&] { db.store.insert_emotion("s1", db.session.session_id, "joy", 0.5, 1); }),
            ErrorCode::InvalidLabel);
  EXPECT_EQ(db.store.count_emotions(), 0u);
}

TEST(Store, EmotionQueryMatchesSortedInsertionOracle) {
  Seeded db;
  std::mt19937_64 rng(11);
  std::vector<EmotionObservation> inserted;
  for (int i = 0; i < 60; ++i) {
    EmotionObservation o{rng() % 2 ? "s1" : "s2", db.session.session_id, static_cast<EmotionClass>(rng() % 4),
                         0.25 + static_cast<double>(rng() % 75) / 100.0, static_cast<TimestampMs>(1000 + rng() % 20)};
    db.store.insert_emotion(o);
    inserted.push_back(o);
  }
  auto oracle = inserted;
  std::stable_sort(oracle.begin(), oracle.end(), [](const EmotionObservation& a, const EmotionObservation& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.student_id < b.student_id;
  });
  EXPECT_EQ(db.store.query_emotions({db.session.session_id, std::nullopt, {}}), oracle);
}

TEST(Store, EmptyStoreAndEmptyRangeReturnNothing) {
  Store store;
  EXPECT_TRUE(store.query_attendance({"session-1", std::nullopt, {}}).empty());
  EXPECT_TRUE(store.query_emotions({"session-1", std::nullopt, {}}).empty());

  Seeded db;
  db.store.insert_emotion({"s1", db.session.session_id, EmotionClass::Boredom, 0.5, 1200});
  EXPECT_TRUE(db.store.query_emotions({db.session.session_id, std::nullopt, TimeRange{1200, 1200}}).empty());
  EXPECT_EQ(db.store.query_emotions({db.session.session_id, std::nullopt, TimeRange{1200, 1201}}).size(), 1u);
  EXPECT_TRUE(db.store.query_emotions({db.session.session_id, std::nullopt, TimeRange{1100, 1200}}).empty());
}

TEST(Store, StudentAndRangeFilterMatchLinearScan) {
  Seeded db;
  db.store.insert_student(profile("s3", 2));
  const auto other = db.store.create_session("other", 0);
  const std::vector<std::string> ids{"s1", "s2", "s3"};
  std::mt19937_64 rng(12);
  std::vector<EmotionObservation> all;
  for (int i = 0; i < 100; ++i) {
    EmotionObservation o{ids[rng() % 3], rng() % 4 ? db.session.session_id : other.session_id,
                         static_cast<EmotionClass>(rng() % 4), 0.5, static_cast<TimestampMs>(rng() % 500)};
    db.store.insert_emotion(o);
    all.push_back(o);
  }
  for (const auto& id : ids) {
    const TimeRange range{100, 400};
    std::vector<EmotionObservation> expected;
    for (const auto& o : all) {
      if (o.session_id == db.session.session_id && o.student_id == id && range.contains(o.timestamp)) {
        expected.push_back(o);
      }
    }
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    EXPECT_EQ(db.store.query_emotions({db.session.session_id, id, range}), expected) << id;
  }
}

TEST(Store, ConcurrentInsertsOfOneKeyYieldExactlyOneRow) {
  TempDir dir;
  for (int round = 0; round < 20; ++round) {
    Seeded db(dir.file("race-" + std::to_string(round) + ".db"));
    std::atomic<int> inserted{0}, rejected{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        const auto outcome = db.store.insert_attendance({"s1", db.session.session_id, 1000 + t, 0.9});
        ++(outcome == InsertOutcome::Inserted ? inserted : rejected);
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(inserted.load(), 1);
    EXPECT_EQ(rejected.load(), 7);
    EXPECT_EQ(db.store.count_attendance(), 1u);
  }
}

TEST(Store, ReopenedFileYieldsIdenticalQueries) {
  TempDir dir;
  const auto path = dir.file("durable.db");
  std::vector<AttendanceRecord> attendance;
  std::vector<EmotionObservation> emotions;
  std::string session_id;
  {
    Seeded db(path);
    session_id = db.session.session_id;
    db.store.insert_attendance({"s2", session_id, 1100, 0.88});
    db.store.insert_attendance({"s1", session_id, 1200, 0.95});
    for (int i = 0; i < 10; ++i) {
      db.store.insert_emotion({i % 2 ? "s1" : "s2", session_id, static_cast<EmotionClass>(i % 4), 0.6, 1100 + i});
    }
    db.store.increment_unmatched(session_id);
    db.store.mark_session_ended(session_id, 5000);
    attendance = db.store.query_attendance({session_id, std::nullopt, {}});
    emotions = db.store.query_emotions({session_id, std::nullopt, {}});
  }
  Store reopened(path);
  EXPECT_EQ(reopened.query_attendance({session_id, std::nullopt, {}}), attendance);
  EXPECT_EQ(reopened.query_emotions({session_id, std::nullopt, {}}), emotions);
  const auto s = reopened.find_session(session_id);
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->status, SessionStatus::Ended);
  EXPECT_EQ(s->ended_at, 5000);
  EXPECT_EQ(s->unmatched_count, 1u);
  const auto students = reopened.students();
  ASSERT_EQ(students.size(), 2u);
  EXPECT_EQ(students[1].reference_embedding, Embedding(test_support::student_embedding(1)));
}

TEST(Export, GoldenLines) {
  Store store;
  store.insert_student(StudentProfile{"s1", "Ada", Embedding(test_support::axis_embedding(0.5)), 7});
  const auto s = store.create_session("CS101", 1000);
  store.insert_attendance({"s1", s.session_id, 1500, 0.91});
  store.insert_emotion({"s1", s.session_id, EmotionClass::Confusion, 0.75, 1500});
  store.mark_session_ended(s.session_id, 9000);

  std::ostringstream out;
  export_store(store, out);
  std::string embedding = "[0.5";
  for (std::size_t i = 1; i < kEmbeddingDim; ++i) embedding += ",0.0";
  embedding += "]";
  EXPECT_EQ(out.str(), "[\"student\",\"s1\",\"Ada\",7," + embedding +
                           "]\n"
                           "[\"session\",\"session-1\",\"CS101\",1000,9000,\"ended\",0]\n"
                           "[\"attendance\",\"s1\",\"session-1\",1500,0.91]\n"
                           "[\"emotion\",\"s1\",\"session-1\",\"confusion\",0.75,1500]\n");
}

TEST(Export, ImportRoundTripIsByteIdentical) {
  Seeded db;
  db.store.insert_attendance({"s1", db.session.session_id, 1100, 0.93});
  for (int i = 0; i < 6; ++i) {
    db.store.insert_emotion({i % 2 ? "s1" : "s2", db.session.session_id, static_cast<EmotionClass>(i % 4),
                             0.1 * (i + 1), 1100 + 10 * i});
  }
  const auto open = db.store.create_session("CS102", 3000);
  db.store.increment_unmatched(open.session_id);
  std::ostringstream first;
  export_store(db.store, first);

  Store copy;
  std::istringstream in(first.str());
  import_store(copy, in);
  std::ostringstream second;
  export_store(copy, second);
  EXPECT_EQ(second.str(), first.str());
}

TEST(Export, MalformedLineRejected) {
  Store store;
  std::istringstream bad("[\"student\",\"s1\"]\n");
  EXPECT_EQ(error_of([&] { import_store(store, bad); }), ErrorCode::MalformedPayload);
  std::istringstream garbage("not json\n");
  EXPECT_EQ(error_of([&] { import_store(store, garbage); }), ErrorCode::MalformedPayload);
}
