#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "classroom/emotion/emotion_class.hpp"
#include "classroom/error.hpp"

namespace classroom {

using EmotionProbabilities = std::array<double, kNumEmotions>;

/// Numerically stable softmax (max-shifted).
template <typename T>
void softmax_inplace(std::span<T> values) {
  if (values.empty()) return;
  const T top = *std::max_element(values.begin(), values.end());
  T sum = 0;
  for (T& v : values) {
    v = std::exp(v - top);
    sum += v;
  }
  for (T& v : values) v /= sum;
}

inline EmotionProbabilities softmax(const std::array<double, kNumEmotions>& logits) {
  EmotionProbabilities p = logits;
  softmax_inplace(std::span<double>(p));
  return p;
}

/// Class of maximal probability; ties go to the lowest code.
inline EmotionClass argmax_emotion(const EmotionProbabilities& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<EmotionClass>(best);
}

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean sparse categorical cross-entropy over a batch.
inline double cross_entropy_loss(std::span<const EmotionProbabilities> batch_probs,
                                 std::span<const int> true_codes) {
  if (batch_probs.size() != true_codes.size()) {
    throw Error(ErrorCode::LengthMismatch, "probabilities and labels differ in length");
  }
  if (batch_probs.empty()) {
    throw Error(ErrorCode::EmptyDataset, "empty batch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < batch_probs.size(); ++i) {
    const EmotionClass cls = emotion_from_code(true_codes[i]);
    const double p = std::max(batch_probs[i][static_cast<std::size_t>(code_of(cls))], kProbabilityFloor);
    total -= std::log(p);
  }
  // -log(1) is -0.0; report a clean zero.
  return std::max(0.0, total / static_cast<double>(batch_probs.size()));
}

}  // namespace classroom
