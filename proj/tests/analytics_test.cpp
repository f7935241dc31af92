#include <gtest/gtest.h>

#include <random>

#include "classroom/analytics/analytics.hpp"
#include "classroom/server/http_api.hpp"
#include "support/fakes.hpp"

using namespace classroom;

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
  Analytics analytics;
  std::string session;

  explicit Rig(std::size_t students = 3)
      : engine(store, registry, std::make_shared<test_support::BrightnessClassifier>()), analytics(engine) {
    for (std::size_t k = 0; k < students; ++k) {
      engine.enroll_student("s" + std::to_string(k + 1), "Student " + std::to_string(k + 1),
                            test_support::student_embedding(k), 0);
    }
    session = engine.start_session("CS101", 10000).session_id;
  }

  void emotion(const std::string& student, EmotionClass e, TimestampMs t) {
    store.insert_emotion({student, session, e, 0.7, t});
  }

  /// Random rows for s1..s3 spread over [start, start + span).
  void random_rows(std::uint64_t seed, int n, TimestampMs span) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) {
      emotion("s" + std::to_string(1 + rng() % 3), static_cast<EmotionClass>(rng() % 4),
              10000 + static_cast<TimestampMs>(rng() % static_cast<std::uint64_t>(span)));
    }
  }
};

std::size_t total_of(const EngagementTimeSeries& ts) {
  std::size_t n = 0;
  for (const auto& b : ts.buckets) {
    for (auto c : b.counts) n += c;
  }
  return n;
}

}  // namespace

TEST(Distribution, EmptySessionIsAllZero) {
  Rig rig;
  const auto d = rig.analytics.emotion_distribution(rig.session);
  EXPECT_EQ(d.total, 0u);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(d.counts[c], 0u);
    EXPECT_EQ(d.fractions[c], 0.0);
  }
  EXPECT_EQ(d.as_of, 0);
}

TEST(Distribution, HandCountedFractions) {
  Rig rig;
  rig.emotion("s1", EmotionClass::Engagement, 10001);
  rig.emotion("s2", EmotionClass::Engagement, 10002);
  rig.emotion("s3", EmotionClass::Engagement, 10003);
  rig.emotion("s1", EmotionClass::Boredom, 10004);
  const auto d = rig.analytics.emotion_distribution(rig.session);
  EXPECT_EQ(d.fractions, (std::array<double, 4>{0.25, 0.0, 0.75, 0.0}));
  EXPECT_EQ(d.as_of, 10004);
}

TEST(Distribution, FullRangeEqualsSumOverDisjointPartition) {
  Rig rig;
  rig.random_rows(1, 300, 600000);
  const auto full = rig.analytics.emotion_distribution(rig.session);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TimestampMs> cuts{10000, 610000};
    for (int i = 0; i < 5; ++i) cuts.push_back(10000 + static_cast<TimestampMs>(rng() % 600000));
    std::sort(cuts.begin(), cuts.end());
    EmotionCounts sum{};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const auto part = rig.analytics.emotion_distribution(rig.session, TimeRange{cuts[i], cuts[i + 1]});
      for (std::size_t c = 0; c < 4; ++c) sum[c] += part.counts[c];
    }
    EXPECT_EQ(sum, full.counts);
  }
}

TEST(Distribution, FractionsFormProbabilityVector) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rig rig;
    rig.random_rows(seed, 1 + static_cast<int>(seed * 7), 100000);
    const auto d = rig.analytics.emotion_distribution(rig.session);
    double s = 0.0;
    for (double f : d.fractions) {
      EXPECT_GE(f, 0.0);
      s += f;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Distribution, UnknownSession) {
  Rig rig;
  EXPECT_EQ(error_of([&] { (void)rig.analytics.emotion_distribution("nope"); }), ErrorCode::UnknownSession);
}

TEST(TimeSeries, SingleRowSingleBucket) {
  Rig rig;
  rig.emotion("s1", EmotionClass::Confusion, 75000);
  const auto ts = rig.analytics.engagement_timeseries(rig.session, 60000);
  ASSERT_EQ(ts.buckets.size(), 1u);
  EXPECT_EQ(ts.buckets[0].bucket_start, 70000);
  EXPECT_LE(ts.buckets[0].bucket_start, 75000);
  EXPECT_GT(ts.buckets[0].bucket_start + 60000, 75000);
  EXPECT_EQ(ts.buckets[0].counts, (EmotionCounts{0, 1, 0, 0}));
}

TEST(TimeSeries, HalfOpenBoundaryGivesTwoBuckets) {
  Rig rig;
  rig.emotion("s1", EmotionClass::Boredom, 10000);
  rig.emotion("s1", EmotionClass::Boredom, 70000);
  const auto ts = rig.analytics.engagement_timeseries(rig.session, 60000);
  ASSERT_EQ(ts.buckets.size(), 2u);
  EXPECT_EQ(ts.buckets[0].counts[0], 1u);
  EXPECT_EQ(ts.buckets[1].counts[0], 1u);
  EXPECT_EQ(ts.buckets[1].bucket_start, 70000);
}

TEST(TimeSeries, EmptyBucketsBetweenRowsAreIncluded) {
  Rig rig;
  rig.emotion("s1", EmotionClass::Boredom, 10000);
  rig.emotion("s1", EmotionClass::Boredom, 250000);
  const auto ts = rig.analytics.engagement_timeseries(rig.session, 60000);
  ASSERT_EQ(ts.buckets.size(), 5u);
  for (std::size_t i = 0; i < ts.buckets.size(); ++i) {
    EXPECT_EQ(ts.buckets[i].bucket_start, 10000 + static_cast<TimestampMs>(i) * 60000);
  }
  EXPECT_EQ(total_of(ts), 2u);
}

TEST(TimeSeries, ConservedUnderRefinement) {
  Rig rig;
  rig.random_rows(3, 500, 900000);
  const std::size_t rows = rig.store.count_emotions(rig.session);
  EmotionCounts coarse{};
  for (const auto& b : rig.analytics.engagement_timeseries(rig.session, 120000).buckets) {
    for (std::size_t c = 0; c < 4; ++c) coarse[c] += b.counts[c];
  }
  for (TimestampMs width : {1, 1000, 30000, 60000, 120000, 10000000}) {
    const auto ts = rig.analytics.engagement_timeseries(rig.session, width);
    EXPECT_EQ(total_of(ts), rows) << width;
    EmotionCounts per_class{};
    for (const auto& b : ts.buckets) {
      for (std::size_t c = 0; c < 4; ++c) per_class[c] += b.counts[c];
    }
    EXPECT_EQ(per_class, coarse) << width;
    for (std::size_t i = 1; i < ts.buckets.size(); ++i) {
      EXPECT_EQ(ts.buckets[i].bucket_start, ts.buckets[i - 1].bucket_start + width);
    }
  }
}

TEST(TimeSeries, RejectsNonPositiveWidth) {
  Rig rig;
  EXPECT_EQ(error_of([&] { (void)rig.analytics.engagement_timeseries(rig.session, 0); }),
            ErrorCode::InvalidBucketWidth);
  EXPECT_EQ(error_of([&] { (void)rig.analytics.engagement_timeseries(rig.session, -5); }),
            ErrorCode::InvalidBucketWidth);
  EXPECT_EQ(error_of([&] { (void)rig.analytics.engagement_timeseries("nope", 1000); }), ErrorCode::UnknownSession);
}

TEST(Profile, MarkedStudentWithFourRows) {
  Rig rig;
  rig.store.insert_attendance({"s2", rig.session, 10500, 0.93});
  for (int i = 0; i < 4; ++i) rig.emotion("s2", static_cast<EmotionClass>(i), 10500 + 2000 * (3 - i));
  rig.emotion("s1", EmotionClass::Boredom, 11000);
  const auto view = rig.analytics.student_profile(rig.session, "s2");
  ASSERT_TRUE(view.attendance.has_value());
  EXPECT_EQ(view.attendance->timestamp, 10500);
  ASSERT_EQ(view.history.size(), 4u);
  for (std::size_t i = 1; i < view.history.size(); ++i) {
    EXPECT_LE(view.history[i - 1].timestamp, view.history[i].timestamp);
  }
  EXPECT_EQ(view.display_name, "Student 2");
}

TEST(Profile, AbsentStudentIsEmpty) {
  Rig rig;
  rig.emotion("s1", EmotionClass::Boredom, 11000);
  const auto view = rig.analytics.student_profile(rig.session, "s3");
  EXPECT_FALSE(view.attendance.has_value());
  EXPECT_TRUE(view.history.empty());
  EXPECT_EQ(error_of([&] { (void)rig.analytics.student_profile(rig.session, "s9"); }), ErrorCode::UnknownStudent);
  EXPECT_EQ(error_of([&] { (void)rig.analytics.student_profile("nope", "s1"); }), ErrorCode::UnknownSession);
}

TEST(Profile, HistoryMatchesLinearScan) {
  Rig rig;
  rig.random_rows(4, 200, 300000);
  const auto all = rig.store.all_emotions();
  for (const std::string id : {"s1", "s2", "s3"}) {
    std::vector<EmotionObservation> expected;
    for (const auto& o : all) {
      if (o.student_id == id) expected.push_back(o);
    }
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    EXPECT_EQ(rig.analytics.student_profile(rig.session, id).history, expected);
  }
}

TEST(Summary, PresentAndAbsentCounts) {
  Rig rig(10);
  for (std::size_t k = 0; k < 7; ++k) {
    rig.engine.process_detection(DetectionEvent{rig.session, 10000 + static_cast<TimestampMs>(k),
                                                test_support::student_embedding(k),
                                                test_support::crop_for(EmotionClass::Frustration), "cam"});
  }
  const auto s = rig.analytics.session_summary(rig.session);
  EXPECT_EQ(s.present, 7u);
  EXPECT_EQ(s.absent, 3u);
  EXPECT_EQ(s.dominant_emotion, EmotionClass::Frustration);
  EXPECT_EQ(s.unmatched_count, 0u);
}

TEST(Summary, TieGoesToBoredom) {
  Rig rig;
  EXPECT_FALSE(rig.analytics.session_summary(rig.session).dominant_emotion.has_value());
  for (int c = 3; c >= 0; --c) rig.emotion("s1", static_cast<EmotionClass>(c), 11000);
  EXPECT_EQ(rig.analytics.session_summary(rig.session).dominant_emotion, EmotionClass::Boredom);
}

TEST(Summary, DominantAgreesWithDistributionArgmax) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rig rig;
    rig.random_rows(seed, static_cast<int>(5 + seed), 50000);
    const auto d = rig.analytics.emotion_distribution(rig.session);
    std::size_t best = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      if (d.counts[c] > d.counts[best]) best = c;
    }
    EXPECT_EQ(rig.analytics.session_summary(rig.session).dominant_emotion, static_cast<EmotionClass>(best));
  }
}

TEST(Reads, RepeatedQueriesReturnIdenticalBytes) {
  Rig rig;
  rig.store.insert_attendance({"s1", rig.session, 10100, 0.9});
  rig.random_rows(5, 80, 200000);
  const auto dump = [&] {
    return api::to_json(rig.analytics.emotion_distribution(rig.session)).dump() +
           api::to_json(rig.analytics.engagement_timeseries(rig.session, 60000)).dump() +
           api::to_json(rig.analytics.student_profile(rig.session, "s1")).dump() +
           api::to_json(rig.analytics.session_summary(rig.session)).dump() +
           api::to_json(rig.engine.session_snapshot(rig.session)).dump();
  };
  const auto first = dump();
  const auto rows = rig.store.count_emotions();
  for (int i = 0; i < 5; ++i) EXPECT_EQ(dump(), first);
  EXPECT_EQ(rig.store.count_emotions(), rows);
}
