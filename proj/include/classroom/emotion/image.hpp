#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "classroom/error.hpp"

namespace classroom {

inline constexpr std::size_t kFaceSize = 64;

/// 8-bit image, row-major, channels interleaved (HWC).
struct RawImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
};

/// Normalized face crop in [0,1], stored channel-major (CHW) for the network.
struct ImageTensor {
  std::size_t channels = 1;
  std::size_t height = kFaceSize;
  std::size_t width = kFaceSize;
  std::vector<float> values;
  std::string provenance;

  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * height + y) * width + x];
  }
};

/// Bilinear resampling with pixel-center alignment (the common "half-pixel"
/// convention); edges clamp. Values remain on the 0-255 scale.
inline std::vector<float> resize_bilinear(const RawImage& src, std::size_t out_h, std::size_t out_w) {
  std::vector<float> out(src.channels * out_h * out_w);
  const double scale_y = static_cast<double>(src.height) / static_cast<double>(out_h);
  const double scale_x = static_cast<double>(src.width) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double sy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0, static_cast<double>(src.height - 1));
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, src.height - 1);
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double sx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0, static_cast<double>(src.width - 1));
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, src.width - 1);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < src.channels; ++c) {
        const double top = src.at(y0, x0, c) * (1.0 - fx) + src.at(y0, x1, c) * fx;
        const double bottom = src.at(y1, x0, c) * (1.0 - fx) + src.at(y1, x1, c) * fx;
        out[(c * out_h + y) * out_w + x] = static_cast<float>(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

/// Resize a raw crop to 64x64 and scale to [0,1].
inline ImageTensor preprocess_face(const RawImage& raw, std::string provenance = {}) {
  if (raw.height == 0 || raw.width == 0) {
    throw Error(ErrorCode::EmptyImage, "crop has zero height or width");
  }
  if (raw.channels == 0 || raw.pixels.size() != raw.height * raw.width * raw.channels) {
    throw Error(ErrorCode::ShapeMismatch, "pixel buffer does not match declared dimensions");
  }
  ImageTensor tensor;
  tensor.channels = raw.channels;
  tensor.provenance = std::move(provenance);
  tensor.values = resize_bilinear(raw, kFaceSize, kFaceSize);
  for (float& v : tensor.values) v = std::clamp(v / 255.0f, 0.0f, 1.0f);
  return tensor;
}

}  // namespace classroom
