#pragma once

#include <httplib.h>
#include <json.hpp>

#include <charconv>
#include <optional>
#include <sstream>
#include <string>

#include "classroom/analytics/analytics.hpp"
#include "classroom/error.hpp"
#include "classroom/identity/enrollment_file.hpp"
#include "classroom/ingest/gateway.hpp"
#include "classroom/session/engine.hpp"

namespace classroom::api {

using nlohmann::json;

inline json to_json(const Session& s) {
  return json{{"session_id", s.session_id},
              {"course_label", s.course_label},
              {"started_at", s.started_at},
              {"ended_at", s.ended_at ? json(*s.ended_at) : json(nullptr)},
              {"status", std::string(to_string(s.status))},
              {"unmatched_count", s.unmatched_count}};
}

inline json to_json(const EmotionCounts& counts) {
  json j = json::object();
  for (auto e : kAllEmotions) j[std::string(label_of(e))] = counts[static_cast<std::size_t>(code_of(e))];
  return j;
}

inline json to_json(const SessionSnapshot& snap) {
  json present = json::array();
  for (const auto& p : snap.present) {
    present.push_back({{"student_id", p.student_id},
                       {"display_name", p.display_name},
                       {"timestamp", p.timestamp},
                       {"confidence", p.confidence}});
  }
  return json{{"session", to_json(snap.session)}, {"present", present}, {"unmatched_count", snap.unmatched_count}};
}

inline json to_json(const EmotionDistribution& d) {
  json fractions = json::object();
  for (auto e : kAllEmotions) fractions[std::string(label_of(e))] = d.fractions[static_cast<std::size_t>(code_of(e))];
  return json{{"session_id", d.session_id},
              {"counts", to_json(d.counts)},
              {"fractions", fractions},
              {"total", d.total},
              {"as_of", d.as_of}};
}

inline json to_json(const EngagementTimeSeries& ts) {
  json buckets = json::array();
  for (const auto& b : ts.buckets) buckets.push_back({{"bucket_start", b.bucket_start}, {"counts", to_json(b.counts)}});
  return json{{"session_id", ts.session_id}, {"bucket_ms", ts.bucket_width_ms}, {"buckets", buckets}};
}

inline json to_json(const StudentProfileView& v) {
  json history = json::array();
  for (const auto& o : v.history) {
    history.push_back({{"emotion", std::string(label_of(o.emotion))},
                       {"confidence", o.confidence},
                       {"timestamp", o.timestamp}});
  }
  json attendance = nullptr;
  if (v.attendance) attendance = {{"timestamp", v.attendance->timestamp}, {"confidence", v.attendance->confidence}};
  return json{{"student_id", v.student_id},
              {"display_name", v.display_name},
              {"present", v.attendance.has_value()},
              {"attendance", attendance},
              {"history", history}};
}

inline json to_json(const SessionSummary& s) {
  return json{{"session_id", s.session_id},
              {"present", s.present},
              {"absent", s.absent},
              {"dominant_emotion",
               s.dominant_emotion ? json(std::string(label_of(*s.dominant_emotion))) : json(nullptr)},
              {"unmatched_count", s.unmatched_count}};
}

inline json to_json(const StudentProfile& p) {
  return json{{"student_id", p.student_id}, {"display_name", p.display_name}, {"enrolled_at", p.enrolled_at}};
}

inline json to_json(const SourceInfo& s) {
  return json{{"source_id", s.source_id},
              {"room_label", s.room_label},
              {"registered", s.registered},
              {"accepted", s.accepted},
              {"rejected", s.rejected}};
}

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownStudent:
      return 404;
    case ErrorCode::AlreadyEnded:
    case ErrorCode::DuplicateStudentId:
    case ErrorCode::SessionNotActive:
      return 409;
    case ErrorCode::BatchTooLarge:
      return 413;
    case ErrorCode::StorageFailure:
    case ErrorCode::IOFailure:
      return 500;
    case ErrorCode::GatewayUnavailable:
      return 503;
    default:
      return 400;
  }
}

struct ServerOptions {
  /// Directory of dashboard assets served at "/"; empty disables it.
  std::string static_dir;
  TimestampMs capture_interval_ms = 2000;
};

/// JSON-over-HTTP front end for the gateway, session control and analytics.
class ApiServer {
 public:
  ApiServer(SessionEngine& engine, IngestionGateway& gateway, ServerOptions options = {})
      : engine_(engine), gateway_(gateway), analytics_(engine), options_(std::move(options)) {
    routes();
  }

  /// Binds `host:port`; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }

  /// Blocks until stop().
  bool serve() { return server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  bool running() const { return server_.is_running(); }

 private:
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        fail(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
      } catch (const json::exception& e) {
        fail(res, 400, "MalformedPayload", e.what());
      } catch (const std::exception& e) {
        fail(res, 500, "Internal", e.what());
      }
    };
  }

  static void fail(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", code}, {"message", message}}.dump(), "application/json");
  }

  static void reply(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::MalformedPayload, "body must be a JSON object");
    return j;
  }

  static std::optional<TimestampMs> query_ms(const httplib::Request& req, const std::string& key) {
    if (!req.has_param(key)) return std::nullopt;
    const std::string v = req.get_param_value(key);
    TimestampMs out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
      throw Error(ErrorCode::InvalidArgument, key + " must be an integer");
    }
    return out;
  }

  void routes() {
    server_.Get("/v1/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      reply(res, {{"status", "ok"}, {"capture_interval_ms", options_.capture_interval_ms}});
    }));

    server_.Post("/v1/detections", guarded([this](const httplib::Request& req, httplib::Response& res) {
      json acks = json::array();
      for (const auto& a : gateway_.submit_json(req.body)) acks.push_back(classroom::to_json(a));
      reply(res, {{"acks", acks}});
    }));

    server_.Post("/v1/sources", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto b = body_of(req);
      reply(res, to_json(gateway_.register_source(b.at("source_id").get<std::string>(),
                                                  b.value("room_label", std::string()))));
    }));
    server_.Get("/v1/sources", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& s : gateway_.sources()) out.push_back(to_json(s));
      reply(res, out);
    }));

    server_.Get("/v1/students", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& p : engine_.registry().list()) out.push_back(to_json(p));
      reply(res, out);
    }));
    server_.Post("/v1/students", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto b = body_of(req);
      const auto profile = engine_.enroll_student(b.at("student_id").get<std::string>(),
                                                  b.value("display_name", std::string()),
                                                  b.at("embedding").get<std::vector<double>>(),
                                                  b.value("enrolled_at", now_ms()));
      reply(res, to_json(profile), 201);
    }));
    // Body is the enrollment file format; all lines are validated before any is enrolled.
    server_.Post("/v1/students/import", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto entries = read_enrollment_text(req.body);
      const TimestampMs at = now_ms();
      json out = json::array();
      for (const auto& e : entries) {
        out.push_back(to_json(engine_.enroll_student(e.student_id, e.display_name,
                                                     std::vector<double>(e.embedding.values().begin(),
                                                                         e.embedding.values().end()),
                                                     at)));
      }
      reply(res, out, 201);
    }));

    server_.Get("/v1/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& s : engine_.sessions()) out.push_back(to_json(s));
      reply(res, out);
    }));
    server_.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto b = body_of(req);
      reply(res, to_json(engine_.start_session(b.value("course_label", std::string()),
                                               b.value("started_at", now_ms()))),
            201);
    }));
    server_.Get(R"(/v1/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, to_json(engine_.session(req.matches[1])));
    }));
    server_.Post(R"(/v1/sessions/([^/]+)/end)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto b = body_of(req);
      reply(res, to_json(engine_.end_session(req.matches[1], b.value("ended_at", now_ms()))));
    }));
    server_.Get(R"(/v1/sessions/([^/]+)/attendance)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, to_json(engine_.session_snapshot(req.matches[1])));
                }));
    server_.Get(R"(/v1/sessions/([^/]+)/summary)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, to_json(analytics_.session_summary(req.matches[1])));
    }));
    server_.Get(R"(/v1/sessions/([^/]+)/emotions/distribution)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const TimeRange range{query_ms(req, "from"), query_ms(req, "to")};
                  reply(res, to_json(analytics_.emotion_distribution(req.matches[1], range)));
                }));
    server_.Get(R"(/v1/sessions/([^/]+)/emotions/timeseries)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const TimestampMs width = query_ms(req, "bucket_ms").value_or(60000);
                  reply(res, to_json(analytics_.engagement_timeseries(req.matches[1], width)));
                }));
    server_.Get(R"(/v1/sessions/([^/]+)/students/([^/]+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, to_json(analytics_.student_profile(req.matches[1], req.matches[2])));
                }));

    if (!options_.static_dir.empty()) server_.set_mount_point("/", options_.static_dir);
  }

  SessionEngine& engine_;
  IngestionGateway& gateway_;
  Analytics analytics_;
  ServerOptions options_;
  httplib::Server server_;
};

}  // namespace classroom::api
