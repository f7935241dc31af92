#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "classroom/error.hpp"
#include "classroom/identity/embedding.hpp"
#include "classroom/types.hpp"

namespace classroom {

struct StudentProfile {
  std::string student_id;
  std::string display_name;
  Embedding reference_embedding;
  TimestampMs enrolled_at = 0;
};

struct MatcherConfig {
  double threshold = 0.6;

  void validate() const {
    if (!(threshold > 0.0 && threshold <= 2.0)) {
      throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0, 2]");
    }
  }
};

struct MatchResult {
  bool matched = false;
  std::optional<std::string> student_id;
  double distance = 0.0;
  double confidence = 0.0;
};

/// Display confidence for a match distance: clamp(1 - d, 0, 1), rounded half-up
/// to two decimals.
inline double match_confidence(double distance) {
  const double raw = std::clamp(1.0 - distance, 0.0, 1.0);
  // The 1e-9 nudge keeps values such as 0.91 - ulp from rounding down.
  return std::floor(raw * 100.0 + 0.5 + 1e-9) / 100.0;
}

/// Enrolled students keyed by id. Readers share the lock; enrollment is exclusive.
class EnrollmentRegistry {
 public:
  StudentProfile enroll(const std::string& student_id, const std::string& display_name,
                        const Embedding& reference, TimestampMs enrolled_at = now_ms()) {
    if (student_id.empty()) {
      throw Error(ErrorCode::InvalidArgument, "student_id must be non-empty");
    }
    StudentProfile profile{student_id, display_name, reference, enrolled_at};
    std::unique_lock lock(mutex_);
    if (profiles_.contains(student_id)) {
      throw Error(ErrorCode::DuplicateStudentId, student_id);
    }
    profiles_.emplace(student_id, profile);
    return profile;
  }

  /// Raw-sequence overload: validates length and finiteness first.
  StudentProfile enroll(const std::string& student_id, const std::string& display_name,
                        const std::vector<double>& reference, TimestampMs enrolled_at = now_ms()) {
    return enroll(student_id, display_name, Embedding(reference), enrolled_at);
  }

  std::optional<StudentProfile> find(const std::string& student_id) const {
    std::shared_lock lock(mutex_);
    auto it = profiles_.find(student_id);
    if (it == profiles_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& student_id) const {
    std::shared_lock lock(mutex_);
    return profiles_.contains(student_id);
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return profiles_.size();
  }

  /// Profiles ordered by student_id.
  std::vector<StudentProfile> list() const {
    std::shared_lock lock(mutex_);
    std::vector<StudentProfile> out;
    out.reserve(profiles_.size());
    for (const auto& [id, p] : profiles_) out.push_back(p);
    return out;
  }

  /// Nearest enrolled reference; accepted only when strictly below the threshold.
  /// Equal minimum distances resolve to the lexicographically smallest id, which
  /// falls out of iterating the ordered map with a strict comparison.
  MatchResult match(const Embedding& probe, const MatcherConfig& config = {}) const {
    config.validate();
    std::shared_lock lock(mutex_);
    const StudentProfile* best = nullptr;
    double best_distance = 0.0;
    for (const auto& [id, profile] : profiles_) {
      const double d = distance(probe, profile.reference_embedding);
      if (best == nullptr || d < best_distance) {
        best = &profile;
        best_distance = d;
      }
    }
    MatchResult result;
    if (best == nullptr) return result;
    result.distance = best_distance;
    result.confidence = match_confidence(best_distance);
    if (best_distance < config.threshold) {
      result.matched = true;
      result.student_id = best->student_id;
    }
    return result;
  }

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, StudentProfile> profiles_;
};

}  // namespace classroom
