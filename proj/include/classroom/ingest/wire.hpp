#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "classroom/emotion/image.hpp"
#include "classroom/error.hpp"
#include "classroom/identity/embedding.hpp"
#include "classroom/ingest/base64.hpp"
#include "classroom/session/engine.hpp"

namespace classroom {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kWireCropBytes = kFaceSize * kFaceSize;

/// One detection as it travels from a perception source to the gateway.
/// See docs/protocol.md for the JSON layout.
struct WireDetection {
  int protocol_version = kProtocolVersion;
  std::string session_id;
  std::string source_id;
  TimestampMs captured_at = 0;
  std::vector<double> embedding;
  /// Base64 of 4096 row-major grayscale bytes.
  std::string face_crop;
};

inline nlohmann::json to_json(const WireDetection& d) {
  return nlohmann::json{{"protocol_version", d.protocol_version},
                        {"session_id", d.session_id},
                        {"source_id", d.source_id},
                        {"captured_at", d.captured_at},
                        {"embedding", d.embedding},
                        {"face_crop", d.face_crop}};
}

/// Field-level parse; missing or mistyped fields are MalformedPayload.
inline WireDetection wire_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedPayload, "detection must be an object");
  try {
    WireDetection d;
    d.protocol_version = j.at("protocol_version").get<int>();
    d.session_id = j.at("session_id").get<std::string>();
    d.source_id = j.at("source_id").get<std::string>();
    d.captured_at = j.at("captured_at").get<TimestampMs>();
    d.embedding = j.at("embedding").get<std::vector<double>>();
    d.face_crop = j.at("face_crop").get<std::string>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedPayload, e.what());
  }
}

inline std::string encode_crop(const RawImage& crop) {
  if (crop.height != kFaceSize || crop.width != kFaceSize || crop.channels != 1 ||
      crop.pixels.size() != kWireCropBytes) {
    throw Error(ErrorCode::ShapeMismatch, "wire crops are 64x64 grayscale");
  }
  return base64::encode(crop.pixels);
}

/// Validates a wire record and converts it into an engine event.
inline DetectionEvent to_detection_event(const WireDetection& d) {
  if (d.protocol_version != kProtocolVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "protocol_version " + std::to_string(d.protocol_version));
  }
  if (d.session_id.empty()) throw Error(ErrorCode::MalformedPayload, "empty session_id");
  (void)Embedding(d.embedding);
  auto bytes = base64::decode(d.face_crop);
  if (!bytes) throw Error(ErrorCode::MalformedPayload, "face_crop is not valid base64");
  if (bytes->size() != kWireCropBytes) {
    throw Error(ErrorCode::MalformedPayload,
                "face_crop decodes to " + std::to_string(bytes->size()) + " bytes, expected 4096");
  }
  DetectionEvent e;
  e.session_id = d.session_id;
  e.source_id = d.source_id;
  e.captured_at = d.captured_at;
  e.embedding = d.embedding;
  e.face_crop = RawImage{kFaceSize, kFaceSize, 1, std::move(*bytes)};
  return e;
}

}  // namespace classroom
