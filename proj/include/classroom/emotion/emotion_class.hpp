#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "classroom/error.hpp"

namespace classroom {

/// Integer codes follow alphabetical label order.
enum class EmotionClass : int {
  Boredom = 0,
  Confusion = 1,
  Engagement = 2,
  Frustration = 3,
};

inline constexpr std::size_t kNumEmotions = 4;

inline constexpr std::array<EmotionClass, kNumEmotions> kAllEmotions = {
    EmotionClass::Boredom, EmotionClass::Confusion, EmotionClass::Engagement,
    EmotionClass::Frustration};

constexpr int code_of(EmotionClass e) noexcept { return static_cast<int>(e); }

inline EmotionClass emotion_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kNumEmotions)) {
    throw Error(ErrorCode::InvalidLabel, "class code out of range: " + std::to_string(code));
  }
  return static_cast<EmotionClass>(code);
}

constexpr std::string_view label_of(EmotionClass e) noexcept {
  switch (e) {
    case EmotionClass::Boredom: return "boredom";
    case EmotionClass::Confusion: return "confusion";
    case EmotionClass::Engagement: return "engagement";
    case EmotionClass::Frustration: return "frustration";
  }
  return "";
}

/// Case-insensitive label lookup.
inline std::optional<EmotionClass> try_parse_emotion(std::string_view label) {
  for (EmotionClass e : kAllEmotions) {
    const auto name = label_of(e);
    if (name.size() != label.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < name.size(); ++i) {
      const char c = label[i];
      const char lower = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
      if (lower != name[i]) {
        same = false;
        break;
      }
    }
    if (same) return e;
  }
  return std::nullopt;
}

inline EmotionClass parse_emotion(std::string_view label) {
  if (auto e = try_parse_emotion(label)) return *e;
  throw Error(ErrorCode::InvalidLabel, "unknown emotion label '" + std::string(label) + "'");
}

}  // namespace classroom
