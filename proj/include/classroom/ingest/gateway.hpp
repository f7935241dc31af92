#pragma once

#include <json.hpp>

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "classroom/error.hpp"
#include "classroom/ingest/wire.hpp"
#include "classroom/session/engine.hpp"

namespace classroom {

struct GatewayConfig {
  TimestampMs capture_interval_ms = 2000;
  std::size_t max_batch = 32;

  void validate() const {
    if (capture_interval_ms <= 0) throw Error(ErrorCode::InvalidArgument, "capture_interval_ms must be > 0");
    if (max_batch == 0) throw Error(ErrorCode::InvalidArgument, "max_batch must be > 0");
  }
};

/// Per-event acknowledgment.
struct Acknowledgment {
  bool accepted = false;
  std::optional<ErrorCode> reason;
  /// Engine outcome for accepted events.
  std::optional<OutcomeKind> outcome;
  bool unregistered_source = false;
};

struct SourceInfo {
  std::string source_id;
  std::string room_label;
  bool registered = false;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Anything the simulator can push detections into: the in-process gateway or
/// an HTTP client talking to one.
class DetectionSink {
 public:
  virtual ~DetectionSink() = default;
  virtual std::size_t max_batch() const = 0;
  virtual std::vector<Acknowledgment> submit(const std::vector<WireDetection>& batch) = 0;
};

inline nlohmann::json to_json(const Acknowledgment& a) {
  nlohmann::json j{{"status", a.accepted ? "accepted" : "rejected"}};
  if (a.reason) j["reason"] = std::string(to_string(*a.reason));
  if (a.outcome) j["outcome"] = std::string(to_string(*a.outcome));
  if (a.unregistered_source) j["flags"] = nlohmann::json::array({"unregistered_source"});
  return j;
}

/// Validates wire batches and feeds the session engine.
///
/// A batch is applied under one gateway lock, event by event in batch order,
/// so concurrent submitters are serialized by arrival. An invalid event is
/// rejected on its own and never touches the store.
class IngestionGateway final : public DetectionSink {
 public:
  IngestionGateway(SessionEngine& engine, GatewayConfig config = {}) : engine_(engine), config_(config) {
    config_.validate();
  }

  const GatewayConfig& config() const { return config_; }
  std::size_t max_batch() const override { return config_.max_batch; }

  std::vector<Acknowledgment> submit(const std::vector<WireDetection>& batch) override {
    return submit_detections(batch);
  }

  std::vector<Acknowledgment> submit_detections(const std::vector<WireDetection>& batch) {
    if (batch.size() > config_.max_batch) {
      throw Error(ErrorCode::BatchTooLarge,
                  std::to_string(batch.size()) + " events exceed max_batch " + std::to_string(config_.max_batch));
    }
    std::lock_guard lock(mutex_);
    std::vector<Acknowledgment> acks;
    acks.reserve(batch.size());
    for (const auto& wire : batch) acks.push_back(ingest_locked(wire));
    return acks;
  }

  /// Body: {"detections": [ ... ]}. Entries that are not well-formed detection
  /// objects are rejected individually with MalformedPayload.
  std::vector<Acknowledgment> submit_json(std::string_view body) {
    nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("detections") || !doc["detections"].is_array()) {
      throw Error(ErrorCode::MalformedPayload, "expected {\"detections\": [...]}");
    }
    const auto& items = doc["detections"];
    if (items.size() > config_.max_batch) {
      throw Error(ErrorCode::BatchTooLarge,
                  std::to_string(items.size()) + " events exceed max_batch " + std::to_string(config_.max_batch));
    }
    std::lock_guard lock(mutex_);
    std::vector<Acknowledgment> acks;
    acks.reserve(items.size());
    for (const auto& item : items) {
      std::optional<WireDetection> wire;
      try {
        wire = wire_from_json(item);
      } catch (const Error& e) {
        Acknowledgment ack;
        ack.reason = e.code();
        acks.push_back(ack);
        continue;
      }
      acks.push_back(ingest_locked(*wire));
    }
    return acks;
  }

  /// Idempotent; re-registering only updates the room label.
  SourceInfo register_source(const std::string& source_id, const std::string& room_label) {
    if (source_id.empty()) throw Error(ErrorCode::InvalidArgument, "source_id must be non-empty");
    std::lock_guard lock(mutex_);
    auto& info = sources_[source_id];
    info.source_id = source_id;
    info.room_label = room_label;
    info.registered = true;
    return info;
  }

  /// Registered sources plus any unregistered source that has submitted.
  std::vector<SourceInfo> sources() const {
    std::lock_guard lock(mutex_);
    std::vector<SourceInfo> out;
    for (const auto& [id, info] : sources_) out.push_back(info);
    return out;
  }

 private:
  Acknowledgment ingest_locked(const WireDetection& wire) {
    Acknowledgment ack;
    auto& source = sources_[wire.source_id];
    if (source.source_id.empty() && !source.registered) source.source_id = wire.source_id;
    ack.unregistered_source = !source.registered;
    try {
      const DetectionEvent event = to_detection_event(wire);
      const ProcessOutcome outcome = engine_.process_detection(event);
      if (outcome.kind == OutcomeKind::Rejected) {
        ack.reason = outcome.reject_reason;
      } else {
        ack.accepted = true;
        ack.outcome = outcome.kind;
      }
    } catch (const Error& e) {
      ack.reason = e.code();
    }
    if (ack.accepted) ++source.accepted; else ++source.rejected;
    return ack;
  }

  SessionEngine& engine_;
  GatewayConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, SourceInfo> sources_;
};

}  // namespace classroom
