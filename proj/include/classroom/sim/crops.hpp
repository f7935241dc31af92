#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "classroom/emotion/emotion_class.hpp"
#include "classroom/emotion/image.hpp"
#include "classroom/emotion/trainer.hpp"

namespace classroom::sim {

/// Rendering constants for synthetic face crops. The blob is wide enough to
/// reach the image border, which is what lets a globally pooled network tell
/// the quadrants apart through its zero padding.
struct CropStyle {
  double background = 20.0;
  double blob_amplitude = 220.0;
  double blob_sigma = 16.0;
  double pixel_noise_sigma = 10.0;
};

/// Blob center (x, y) for a class: boredom NW, confusion NE, engagement SW,
/// frustration SE, each at the middle of its quadrant.
inline std::pair<double, double> blob_center(EmotionClass emotion) {
  constexpr double lo = kFaceSize / 4.0;
  constexpr double hi = 3.0 * kFaceSize / 4.0;
  switch (emotion) {
    case EmotionClass::Boredom: return {lo, lo};
    case EmotionClass::Confusion: return {hi, lo};
    case EmotionClass::Engagement: return {lo, hi};
    case EmotionClass::Frustration: return {hi, hi};
  }
  return {lo, lo};
}

/// 64x64 grayscale crop: class-positioned Gaussian blob plus seeded pixel noise.
inline RawImage render_emotion_crop(EmotionClass emotion, std::uint64_t seed, const CropStyle& style = {}) {
  RawImage img;
  img.height = kFaceSize;
  img.width = kFaceSize;
  img.channels = 1;
  img.pixels.resize(kFaceSize * kFaceSize);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, style.pixel_noise_sigma);
  const auto [cx, cy] = blob_center(emotion);
  const double two_s2 = 2.0 * style.blob_sigma * style.blob_sigma;
  for (std::size_t y = 0; y < kFaceSize; ++y) {
    for (std::size_t x = 0; x < kFaceSize; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double value =
          style.background + style.blob_amplitude * std::exp(-(dx * dx + dy * dy) / two_s2) + noise(rng);
      img.pixels[y * kFaceSize + x] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
    }
  }
  return img;
}

/// Balanced labeled set of preprocessed synthetic crops, `per_class` per class,
/// with crop seeds derived from `seed`.
inline LabeledDataset synthetic_crop_dataset(std::size_t per_class, std::uint64_t seed,
                                             SplitTag split = SplitTag::Train) {
  LabeledDataset data;
  data.split = split;
  data.items.reserve(per_class * kNumEmotions);
  std::mt19937_64 seeds(seed);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (EmotionClass e : kAllEmotions) {
      const std::uint64_t crop_seed = seeds();
      data.items.push_back(LabeledImage{preprocess_face(render_emotion_crop(e, crop_seed)), code_of(e)});
    }
  }
  return data;
}

}  // namespace classroom::sim
