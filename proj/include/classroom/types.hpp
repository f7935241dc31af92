#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

namespace classroom {

/// UTC milliseconds since the Unix epoch.
using TimestampMs = std::int64_t;

inline TimestampMs now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

/// Half-open time window [begin, end). Missing bounds are unbounded.
struct TimeRange {
  std::optional<TimestampMs> begin;
  std::optional<TimestampMs> end;

  bool contains(TimestampMs t) const {
    return (!begin || t >= *begin) && (!end || t < *end);
  }
};

}  // namespace classroom
