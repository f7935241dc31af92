#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "classroom/identity/embedding.hpp"
#include "classroom/ingest/gateway.hpp"
#include "classroom/ingest/wire.hpp"
#include "classroom/sim/crops.hpp"
#include "classroom/sim/scenario.hpp"

namespace classroom::sim {

struct SimStudent {
  std::string student_id;
  std::string display_name;
  std::vector<double> embedding;
};

namespace detail {

/// Independent generator per concern so that, e.g., changing the intruder
/// count does not perturb the students' noise stream.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline std::vector<double> draw_embedding(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(kEmbeddingDim);
  for (double& x : v) x = dist(rng);
  return v;
}

/// Draws until the candidate is farther than `min_distance` from every
/// reference; InvalidScenario if that keeps failing.
inline std::vector<double> draw_separated(std::mt19937_64& rng, double scale, double min_distance,
                                          const std::vector<SimStudent>& others) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    auto candidate = draw_embedding(rng, scale);
    bool ok = true;
    for (const auto& o : others) {
      if (distance(candidate, o.embedding) <= min_distance) {
        ok = false;
        break;
      }
    }
    if (ok) return candidate;
  }
  throw Error(ErrorCode::InvalidScenario, "cannot separate embeddings; raise embedding_scale");
}

inline std::string student_id_for(std::size_t index, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(count).size());
  std::string n = std::to_string(index + 1);
  return "s" + std::string(width - n.size(), '0') + n;
}

}  // namespace detail

/// Enrollment population whose pairwise distances all exceed 2 * threshold.
inline std::vector<SimStudent> generate_students(const SimScenario& scenario) {
  scenario.validate();
  auto rng = detail::stream(scenario.seed, 1);
  std::vector<SimStudent> out;
  out.reserve(scenario.student_count);
  for (std::size_t i = 0; i < scenario.student_count; ++i) {
    auto embedding = detail::draw_separated(rng, scenario.embedding_scale, 2.0 * scenario.threshold, out);
    const auto id = detail::student_id_for(i, scenario.student_count);
    out.push_back(SimStudent{id, "Student " + id.substr(1), std::move(embedding)});
  }
  return out;
}

/// Markov chain over emotion states.
class EmotionChain {
 public:
  EmotionChain(const TransitionMatrix& transition, EmotionClass initial) : state_(initial) {
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
      rows_[i] = std::discrete_distribution<int>(transition[i].begin(), transition[i].end());
    }
  }

  EmotionClass state() const { return state_; }

  EmotionClass step(std::mt19937_64& rng) {
    state_ = static_cast<EmotionClass>(rows_[static_cast<std::size_t>(code_of(state_))](rng));
    return state_;
  }

 private:
  std::array<std::discrete_distribution<int>, kNumEmotions> rows_;
  EmotionClass state_;
};

struct GroundTruthEntry {
  std::size_t tick = 0;
  TimestampMs captured_at = 0;
  /// Student id, or "intruder-<k>".
  std::string subject_id;
  bool intruder = false;
  EmotionClass emotion = EmotionClass::Boredom;
  bool emitted = false;
  /// Gateway acknowledgment for emitted detections.
  std::optional<Acknowledgment> ack;
};

struct GroundTruthLog {
  std::vector<GroundTruthEntry> entries;
  std::size_t ticks = 0;

  std::size_t emitted_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.emitted ? 1 : 0;
    return n;
  }
};

struct RunOptions {
  std::string session_id;
  TimestampMs start_time = 0;
  /// Run ticks back to back instead of waiting tick_ms between them.
  bool compressed = true;
  std::function<void(std::size_t tick)> on_tick;
};

/// Plays a scenario against a detection sink. Every tick emits one detection
/// per present student (true embedding plus per-component Gaussian noise, crop
/// rendered from the student's current emotion) and one per intruder (fresh
/// random embedding kept more than 2 * threshold from every student).
inline GroundTruthLog run_scenario(const SimScenario& scenario, const std::vector<SimStudent>& students,
                                   DetectionSink& sink, const RunOptions& options) {
  scenario.validate();
  auto noise_rng = detail::stream(scenario.seed, 2);
  auto emotion_rng = detail::stream(scenario.seed, 3);
  auto crop_rng = detail::stream(scenario.seed, 4);
  auto intruder_rng = detail::stream(scenario.seed, 5);
  std::normal_distribution<double> noise(0.0, scenario.embedding_noise_sigma);
  std::uniform_int_distribution<int> any_class(0, static_cast<int>(kNumEmotions) - 1);

  std::vector<EmotionChain> chains;
  chains.reserve(students.size());
  for (std::size_t i = 0; i < students.size(); ++i) {
    chains.emplace_back(scenario.emotion_transition, static_cast<EmotionClass>(any_class(emotion_rng)));
  }
  std::vector<bool> absent(students.size(), false);
  for (std::size_t i = 0; i < students.size(); ++i) {
    for (const auto& a : scenario.absent_students) absent[i] = absent[i] || a == students[i].student_id;
  }

  GroundTruthLog log;
  log.ticks = scenario.tick_count();
  const auto wall_start = std::chrono::steady_clock::now();
  for (std::size_t tick = 0; tick < log.ticks; ++tick) {
    const TimestampMs at = options.start_time + static_cast<TimestampMs>(tick) * scenario.tick_ms;
    std::vector<WireDetection> batch;
    std::vector<std::size_t> entry_of;
    const auto emit = [&](const std::string& subject, bool intruder, EmotionClass emotion,
                          std::vector<double> embedding) {
      WireDetection d;
      d.session_id = options.session_id;
      d.source_id = "simulator";
      d.captured_at = at;
      d.embedding = std::move(embedding);
      d.face_crop = encode_crop(render_emotion_crop(emotion, crop_rng()));
      entry_of.push_back(log.entries.size());
      log.entries.push_back(GroundTruthEntry{tick, at, subject, intruder, emotion, true, std::nullopt});
      batch.push_back(std::move(d));
    };

    for (std::size_t i = 0; i < students.size(); ++i) {
      const EmotionClass emotion = tick == 0 ? chains[i].state() : chains[i].step(emotion_rng);
      if (absent[i]) {
        log.entries.push_back(GroundTruthEntry{tick, at, students[i].student_id, false, emotion, false, std::nullopt});
        continue;
      }
      std::vector<double> e = students[i].embedding;
      if (scenario.embedding_noise_sigma > 0.0) {
        for (double& x : e) x += noise(noise_rng);
      }
      emit(students[i].student_id, false, emotion, std::move(e));
    }
    for (std::size_t k = 0; k < scenario.intruder_count; ++k) {
      auto e = detail::draw_separated(intruder_rng, scenario.embedding_scale, 2.0 * scenario.threshold, students);
      emit("intruder-" + std::to_string(k + 1), true, static_cast<EmotionClass>(any_class(intruder_rng)),
           std::move(e));
    }

    const std::size_t chunk = std::max<std::size_t>(1, sink.max_batch());
    for (std::size_t start = 0; start < batch.size(); start += chunk) {
      const std::size_t end = std::min(batch.size(), start + chunk);
      std::vector<WireDetection> part(batch.begin() + static_cast<std::ptrdiff_t>(start),
                                      batch.begin() + static_cast<std::ptrdiff_t>(end));
      const auto acks = sink.submit(part);
      for (std::size_t i = 0; i < acks.size() && start + i < end; ++i) log.entries[entry_of[start + i]].ack = acks[i];
    }
    if (options.on_tick) options.on_tick(tick);
    if (!options.compressed) {
      std::this_thread::sleep_until(wall_start + std::chrono::milliseconds(scenario.tick_ms * static_cast<TimestampMs>(tick + 1)));
    }
  }
  return log;
}

/// Drops a simulated population into an engine's registry and store.
inline void enroll_students(SessionEngine& engine, const std::vector<SimStudent>& students,
                            TimestampMs enrolled_at = 0) {
  for (const auto& s : students) engine.enroll_student(s.student_id, s.display_name, s.embedding, enrolled_at);
}

}  // namespace classroom::sim
