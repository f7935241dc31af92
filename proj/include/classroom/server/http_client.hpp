#pragma once

#include <httplib.h>
#include <json.hpp>

#include <string>
#include <vector>

#include "classroom/error.hpp"
#include "classroom/ingest/gateway.hpp"
#include "classroom/ingest/wire.hpp"

namespace classroom::api {

inline Acknowledgment acknowledgment_from_json(const nlohmann::json& j) {
  Acknowledgment a;
  a.accepted = j.value("status", std::string()) == "accepted";
  if (j.contains("reason")) a.reason = try_parse_error_code(j["reason"].get<std::string>());
  if (j.contains("outcome")) a.outcome = try_parse_outcome(j["outcome"].get<std::string>());
  if (j.contains("flags")) {
    for (const auto& f : j["flags"]) a.unregistered_source = a.unregistered_source || f == "unregistered_source";
  }
  return a;
}

/// Posts detection batches to a remote gateway at `base_url`
/// (e.g. "http://127.0.0.1:8080").
class HttpDetectionSink final : public DetectionSink {
 public:
  explicit HttpDetectionSink(const std::string& base_url, std::size_t max_batch = 32)
      : client_(base_url), max_batch_(max_batch) {
    client_.set_connection_timeout(5);
    client_.set_read_timeout(30);
  }

  std::size_t max_batch() const override { return max_batch_; }

  std::vector<Acknowledgment> submit(const std::vector<WireDetection>& batch) override {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& d : batch) items.push_back(to_json(d));
    const auto res = client_.Post("/v1/detections", nlohmann::json{{"detections", items}}.dump(), "application/json");
    if (!res) throw Error(ErrorCode::GatewayUnavailable, httplib::to_string(res.error()));
    const auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (res->status != 200) {
      ErrorCode code = ErrorCode::GatewayUnavailable;
      if (body.is_object() && body.contains("error")) {
        code = try_parse_error_code(body["error"].get<std::string>()).value_or(code);
      }
      throw Error(code, "gateway answered HTTP " + std::to_string(res->status));
    }
    if (body.is_discarded() || !body.contains("acks")) {
      throw Error(ErrorCode::MalformedPayload, "gateway response lacks acks");
    }
    std::vector<Acknowledgment> acks;
    for (const auto& a : body["acks"]) acks.push_back(acknowledgment_from_json(a));
    return acks;
  }

 private:
  httplib::Client client_;
  std::size_t max_batch_;
};

}  // namespace classroom::api
