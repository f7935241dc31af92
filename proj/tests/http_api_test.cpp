#include <gtest/gtest.h>

#include <thread>

#include "classroom/server/http_api.hpp"
#include "classroom/server/http_client.hpp"
#include "classroom/sim/simulator.hpp"
#include "support/fakes.hpp"

using namespace classroom;
using nlohmann::json;
using test_support::student_embedding;

namespace {

class Api : public ::testing::Test {
 protected:
  Api() : engine_(store_, registry_, std::make_shared<test_support::BrightnessClassifier>()), gateway_(engine_) {}

  void SetUp() override {
    server_ = std::make_unique<api::ApiServer>(engine_, gateway_);
    port_ = server_->bind("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->serve(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_->stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::pair<int, json> get(const std::string& path) {
    const auto res = client_->Get(path);
    EXPECT_TRUE(res) << path;
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body, nullptr, false)};
  }

  std::pair<int, json> post(const std::string& path, const json& body) {
    const auto res = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res) << path;
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body, nullptr, false)};
  }

  std::string enroll_and_start(std::size_t students) {
    for (std::size_t k = 0; k < students; ++k) {
      const auto [status, body] = post("/v1/students", {{"student_id", "s" + std::to_string(k + 1)},
                                                        {"display_name", "Student " + std::to_string(k + 1)},
                                                        {"embedding", student_embedding(k)},
                                                        {"enrolled_at", 5}});
      EXPECT_EQ(status, 201);
    }
    const auto [status, body] = post("/v1/sessions", {{"course_label", "CS101"}, {"started_at", 1000}});
    EXPECT_EQ(status, 201);
    return body.at("session_id").get<std::string>();
  }

  Store store_;
  EnrollmentRegistry registry_;
  SessionEngine engine_;
  IngestionGateway gateway_;
  std::unique_ptr<api::ApiServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST(HttpStatus, ErrorMapping) {
  EXPECT_EQ(api::http_status(ErrorCode::UnknownSession), 404);
  EXPECT_EQ(api::http_status(ErrorCode::AlreadyEnded), 409);
  EXPECT_EQ(api::http_status(ErrorCode::BatchTooLarge), 413);
  EXPECT_EQ(api::http_status(ErrorCode::MalformedPayload), 400);
  EXPECT_EQ(api::http_status(ErrorCode::InvalidBucketWidth), 400);
}

TEST_F(Api, HealthReportsCaptureInterval) {
  const auto [status, body] = get("/v1/health");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body.at("status"), "ok");
  EXPECT_EQ(body.at("capture_interval_ms"), 2000);
}

TEST_F(Api, SessionLifecycle) {
  const auto id = enroll_and_start(2);
  auto [status, body] = get("/v1/sessions/" + id);
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body.at("status"), "active");
  EXPECT_EQ(body.at("course_label"), "CS101");
  std::tie(status, body) = get("/v1/sessions");
  ASSERT_EQ(body.size(), 1u);
  std::tie(status, body) = post("/v1/sessions/" + id + "/end", {{"ended_at", 9000}});
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body.at("status"), "ended");
  EXPECT_EQ(body.at("ended_at"), 9000);
  std::tie(status, body) = post("/v1/sessions/" + id + "/end", {{"ended_at", 9500}});
  EXPECT_EQ(status, 409);
  EXPECT_EQ(body.at("error"), "AlreadyEnded");
  std::tie(status, body) = get("/v1/sessions/session-404");
  EXPECT_EQ(status, 404);
  EXPECT_EQ(body.at("error"), "UnknownSession");
}

TEST_F(Api, StudentsEnrollListAndReject) {
  enroll_and_start(2);
  auto [status, body] = get("/v1/students");
  ASSERT_EQ(body.size(), 2u);
  EXPECT_EQ(body[0].at("student_id"), "s1");
  std::tie(status, body) = post("/v1/students", {{"student_id", "s1"}, {"embedding", student_embedding(5)}});
  EXPECT_EQ(status, 409);
  EXPECT_EQ(body.at("error"), "DuplicateStudentId");
  std::tie(status, body) =
      post("/v1/students", {{"student_id", "s9"}, {"embedding", std::vector<double>(127, 0.0)}});
  EXPECT_EQ(status, 400);
  EXPECT_EQ(body.at("error"), "InvalidEmbedding");
  const auto res = client_->Post("/v1/students", "{", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(Api, ImportEnrollmentFile) {
  const std::string text = format_enrollment_line("a1", "Ann", Embedding(student_embedding(3))) + "\n" +
                           format_enrollment_line("a2", "Ben", Embedding(student_embedding(4))) + "\n";
  const auto res = client_->Post("/v1/students/import", text, "text/csv");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  EXPECT_EQ(json::parse(res->body).size(), 2u);
  EXPECT_TRUE(registry_.contains("a2"));
}

TEST_F(Api, DetectionsFlowIntoReadViews) {
  const auto id = enroll_and_start(3);
  json detections = json::array();
  detections.push_back(to_json(test_support::wire(id, student_embedding(0), 1000, EmotionClass::Engagement)));
  detections.push_back(to_json(test_support::wire(id, student_embedding(0), 3000, EmotionClass::Engagement)));
  detections.push_back(to_json(test_support::wire(id, student_embedding(1), 3000, EmotionClass::Boredom)));
  detections.push_back(to_json(test_support::wire(id, test_support::axis_embedding(-4.0, 90), 3000)));
  auto [status, body] = post("/v1/detections", {{"detections", detections}});
  ASSERT_EQ(status, 200);
  ASSERT_EQ(body.at("acks").size(), 4u);
  EXPECT_EQ(body["acks"][0].at("outcome"), "attendance_marked");
  EXPECT_EQ(body["acks"][1].at("outcome"), "attendance_skipped_emotion_logged");
  EXPECT_EQ(body["acks"][3].at("outcome"), "unmatched_ignored");
  EXPECT_EQ(body["acks"][0].at("flags"), json::array({"unregistered_source"}));

  std::tie(status, body) = get("/v1/sessions/" + id + "/attendance");
  ASSERT_EQ(body.at("present").size(), 2u);
  EXPECT_EQ(body["present"][0].at("student_id"), "s1");
  EXPECT_EQ(body["present"][0].at("confidence"), 1.0);
  EXPECT_EQ(body.at("unmatched_count"), 1);

  std::tie(status, body) = get("/v1/sessions/" + id + "/emotions/distribution");
  EXPECT_EQ(body.at("total"), 3);
  EXPECT_EQ(body.at("counts").at("engagement"), 2);
  EXPECT_EQ(body.at("counts").at("boredom"), 1);
  std::tie(status, body) = get("/v1/sessions/" + id + "/emotions/distribution?from=2000&to=4000");
  EXPECT_EQ(body.at("total"), 2);

  std::tie(status, body) = get("/v1/sessions/" + id + "/emotions/timeseries?bucket_ms=2000");
  ASSERT_EQ(body.at("buckets").size(), 2u);
  EXPECT_EQ(body["buckets"][1].at("bucket_start"), 3000);
  std::tie(status, body) = get("/v1/sessions/" + id + "/emotions/timeseries?bucket_ms=0");
  EXPECT_EQ(status, 400);
  EXPECT_EQ(body.at("error"), "InvalidBucketWidth");
  std::tie(status, body) = get("/v1/sessions/" + id + "/emotions/timeseries?bucket_ms=abc");
  EXPECT_EQ(status, 400);

  std::tie(status, body) = get("/v1/sessions/" + id + "/students/s1");
  EXPECT_EQ(body.at("present"), true);
  EXPECT_EQ(body.at("history").size(), 2u);
  std::tie(status, body) = get("/v1/sessions/" + id + "/students/s3");
  EXPECT_EQ(body.at("present"), false);
  EXPECT_TRUE(body.at("attendance").is_null());
  std::tie(status, body) = get("/v1/sessions/" + id + "/students/s77");
  EXPECT_EQ(status, 404);

  std::tie(status, body) = get("/v1/sessions/" + id + "/summary");
  EXPECT_EQ(body.at("present"), 2);
  EXPECT_EQ(body.at("absent"), 1);
  EXPECT_EQ(body.at("dominant_emotion"), "engagement");
}

TEST_F(Api, WholeRequestErrors) {
  const auto id = enroll_and_start(1);
  const auto res = client_->Post("/v1/detections", "nonsense", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(json::parse(res->body).at("error"), "MalformedPayload");
  json many = json::array();
  for (int i = 0; i < 33; ++i) many.push_back(to_json(test_support::wire(id, student_embedding(0), 1000)));
  const auto [status, body] = post("/v1/detections", {{"detections", many}});
  EXPECT_EQ(status, 413);
  EXPECT_EQ(body.at("error"), "BatchTooLarge");
  EXPECT_EQ(store_.count_emotions(), 0u);
}

TEST_F(Api, SourcesRegistration) {
  auto [status, body] = post("/v1/sources", {{"source_id", "cam-1"}, {"room_label", "Room 101"}});
  EXPECT_EQ(status, 200);
  post("/v1/sources", {{"source_id", "cam-1"}, {"room_label", "Room 101"}});
  std::tie(status, body) = get("/v1/sources");
  ASSERT_EQ(body.size(), 1u);
  EXPECT_EQ(body[0].at("registered"), true);
  std::tie(status, body) = post("/v1/sources", {{"room_label", "x"}});
  EXPECT_EQ(status, 400);
}

TEST_F(Api, HttpSinkDrivesSimulatorRemotely) {
  sim::SimScenario scenario;
  scenario.seed = 3;
  scenario.student_count = 5;
  scenario.session_minutes = 10 * 2000.0 / 60000.0;
  scenario.embedding_noise_sigma = 0.0;
  scenario.intruder_count = 1;
  const auto students = sim::generate_students(scenario);
  sim::enroll_students(engine_, students);
  const auto id = engine_.start_session("remote", 0).session_id;
  api::HttpDetectionSink sink(base_url());
  const auto log = sim::run_scenario(scenario, students, sink, sim::RunOptions{id, 0, true, {}});
  EXPECT_EQ(log.emitted_count(), 60u);
  EXPECT_EQ(store_.count_attendance(id), 5u);
  EXPECT_EQ(store_.count_emotions(id), 50u);
  EXPECT_EQ(engine_.session(id).unmatched_count, 10u);
  for (const auto& e : log.entries) {
    ASSERT_TRUE(e.ack.has_value());
    EXPECT_TRUE(e.ack->accepted);
    EXPECT_TRUE(e.ack->unregistered_source);
  }
}

TEST_F(Api, HttpSinkSurfacesGatewayErrors) {
  const auto id = enroll_and_start(1);
  api::HttpDetectionSink sink(base_url(), 64);
  const std::vector<WireDetection> batch(40, test_support::wire(id, student_embedding(0), 1000));
  try {
    (void)sink.submit(batch);
    FAIL() << "expected BatchTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BatchTooLarge);
  }
  api::HttpDetectionSink nowhere("http://127.0.0.1:1");
  try {
    (void)nowhere.submit({batch.front()});
    FAIL() << "expected GatewayUnavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GatewayUnavailable);
  }
}

TEST(Acknowledgment, JsonRoundTrip) {
  Acknowledgment a;
  a.accepted = true;
  a.outcome = OutcomeKind::UnmatchedIgnored;
  a.unregistered_source = true;
  const auto back = api::acknowledgment_from_json(to_json(a));
  EXPECT_TRUE(back.accepted);
  EXPECT_EQ(back.outcome, OutcomeKind::UnmatchedIgnored);
  EXPECT_TRUE(back.unregistered_source);
  Acknowledgment r;
  r.reason = ErrorCode::SessionNotActive;
  const auto rb = api::acknowledgment_from_json(to_json(r));
  EXPECT_FALSE(rb.accepted);
  EXPECT_EQ(rb.reason, ErrorCode::SessionNotActive);
}
