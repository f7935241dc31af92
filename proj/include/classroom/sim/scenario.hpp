#pragma once

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "classroom/emotion/emotion_class.hpp"
#include "classroom/error.hpp"
#include "classroom/types.hpp"

namespace classroom::sim {

using TransitionMatrix = std::array<std::array<double, kNumEmotions>, kNumEmotions>;

/// Self-transition 0.85, the remaining 0.15 spread evenly over the other states.
inline TransitionMatrix default_transition() {
  TransitionMatrix m{};
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    for (std::size_t j = 0; j < kNumEmotions; ++j) m[i][j] = i == j ? 0.85 : 0.05;
  }
  return m;
}

struct SimScenario {
  std::uint64_t seed = 1;
  std::size_t student_count = 30;
  double session_minutes = 5.0;
  TimestampMs tick_ms = 2000;
  /// Standard deviation of the Gaussian added to every embedding component.
  double embedding_noise_sigma = 0.05;
  TransitionMatrix emotion_transition = default_transition();
  std::vector<std::string> absent_students;
  std::size_t intruder_count = 0;
  /// Matcher threshold the population is separated against (pairwise > 2x).
  double threshold = 0.6;
  /// Per-component standard deviation of reference embeddings.
  double embedding_scale = 0.1;
  std::string course_label = "simulated-lecture";

  std::size_t tick_count() const {
    return static_cast<std::size_t>(std::llround(session_minutes * 60000.0 / static_cast<double>(tick_ms)));
  }

  void validate() const {
    const auto bad = [](const std::string& what) { return Error(ErrorCode::InvalidScenario, what); };
    if (student_count < 1) throw bad("student_count must be >= 1");
    if (tick_ms <= 0) throw bad("tick_ms must be > 0");
    if (!(session_minutes >= 0.0)) throw bad("session_minutes must be >= 0");
    if (!(embedding_noise_sigma >= 0.0)) throw bad("embedding_noise_sigma must be >= 0");
    if (!(threshold > 0.0)) throw bad("threshold must be > 0");
    if (!(embedding_scale > 0.0)) throw bad("embedding_scale must be > 0");
    for (const auto& row : emotion_transition) {
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw bad("transition probabilities must be >= 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw bad("transition rows must sum to 1");
    }
  }
};

inline nlohmann::json to_json(const SimScenario& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : s.emotion_transition) rows.push_back(std::vector<double>(row.begin(), row.end()));
  return nlohmann::json{{"seed", s.seed},
                        {"student_count", s.student_count},
                        {"session_minutes", s.session_minutes},
                        {"tick_ms", s.tick_ms},
                        {"embedding_noise_sigma", s.embedding_noise_sigma},
                        {"emotion_transition", rows},
                        {"absent_students", s.absent_students},
                        {"intruder_count", s.intruder_count},
                        {"threshold", s.threshold},
                        {"embedding_scale", s.embedding_scale},
                        {"course_label", s.course_label}};
}

/// Missing keys keep their defaults.
inline SimScenario scenario_from_json(const nlohmann::json& j) {
  SimScenario s;
  try {
    s.seed = j.value("seed", s.seed);
    s.student_count = j.value("student_count", s.student_count);
    s.session_minutes = j.value("session_minutes", s.session_minutes);
    s.tick_ms = j.value("tick_ms", s.tick_ms);
    s.embedding_noise_sigma = j.value("embedding_noise_sigma", s.embedding_noise_sigma);
    if (j.contains("emotion_transition")) {
      const auto rows = j.at("emotion_transition").get<std::vector<std::vector<double>>>();
      if (rows.size() != kNumEmotions) throw Error(ErrorCode::InvalidScenario, "transition must be 4x4");
      for (std::size_t i = 0; i < kNumEmotions; ++i) {
        if (rows[i].size() != kNumEmotions) throw Error(ErrorCode::InvalidScenario, "transition must be 4x4");
        for (std::size_t k = 0; k < kNumEmotions; ++k) s.emotion_transition[i][k] = rows[i][k];
      }
    }
    s.absent_students = j.value("absent_students", s.absent_students);
    s.intruder_count = j.value("intruder_count", s.intruder_count);
    s.threshold = j.value("threshold", s.threshold);
    s.embedding_scale = j.value("embedding_scale", s.embedding_scale);
    s.course_label = j.value("course_label", s.course_label);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidScenario, e.what());
  }
  s.validate();
  return s;
}

inline SimScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + path);
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::InvalidScenario, path + " is not valid JSON");
  return scenario_from_json(doc);
}

}  // namespace classroom::sim
