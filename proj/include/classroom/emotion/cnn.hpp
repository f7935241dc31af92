#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "classroom/emotion/emotion_class.hpp"
#include "classroom/emotion/probabilities.hpp"
#include "classroom/error.hpp"

namespace classroom {

/// Input geometry of the reference network. Height and width must be
/// multiples of four (two 2x2 pooling stages).
struct CnnShape {
  std::size_t channels = 1;
  std::size_t height = 64;
  std::size_t width = 64;

  std::size_t input_size() const { return channels * height * width; }
  bool operator==(const CnnShape&) const = default;
};

/// Reference emotion network:
///
///   conv3x3(16, same) -> ReLU -> maxpool2
///   conv3x3(32, same) -> ReLU -> maxpool2
///   global average pool -> dense(64) -> ReLU -> dense(4) -> softmax
///
/// All parameters live in one flat buffer so the optimizer and the
/// checkpoint code see a single tensor. Because of the global pooling the
/// parameter set does not depend on the input resolution.
template <typename T>
class ReferenceCnn {
 public:
  static constexpr std::size_t kConv1Filters = 16;
  static constexpr std::size_t kConv2Filters = 32;
  static constexpr std::size_t kHidden = 64;
  static constexpr std::size_t kClasses = kNumEmotions;
  static constexpr std::size_t kKernel = 3;

  /// Named slice of the flat parameter buffer.
  struct TensorSlot {
    std::string name;
    std::vector<std::size_t> dims;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  explicit ReferenceCnn(CnnShape shape = {}, std::uint64_t seed = 0) : shape_(shape), seed_(seed) {
    if (shape_.channels == 0 || shape_.height == 0 || shape_.width == 0 || shape_.height % 4 != 0 ||
        shape_.width % 4 != 0) {
      throw Error(ErrorCode::ShapeMismatch, "input height/width must be positive multiples of 4");
    }
    const std::size_t c = shape_.channels;
    add_slot("conv1.weight", {kConv1Filters, c, kKernel, kKernel});
    add_slot("conv1.bias", {kConv1Filters});
    add_slot("conv2.weight", {kConv2Filters, kConv1Filters, kKernel, kKernel});
    add_slot("conv2.bias", {kConv2Filters});
    add_slot("dense1.weight", {kHidden, kConv2Filters});
    add_slot("dense1.bias", {kHidden});
    add_slot("dense2.weight", {kClasses, kHidden});
    add_slot("dense2.bias", {kClasses});
    params_.assign(total_, T{0});
    initialize(seed);
  }

  static std::string architecture() {
    return "conv3x3x16-relu-maxpool2,conv3x3x32-relu-maxpool2,gap,dense64-relu,dense4-softmax";
  }

  const CnnShape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t parameter_count() const { return total_; }
  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }
  const std::vector<TensorSlot>& slots() const { return slots_; }

  /// Glorot-uniform weights, zero biases.
  void initialize(std::uint64_t seed) {
    seed_ = seed;
    std::mt19937_64 rng(seed);
    const auto glorot = [&](const TensorSlot& slot, double fan_in, double fan_out) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (std::size_t i = 0; i < slot.size; ++i) params_[slot.offset + i] = static_cast<T>(dist(rng));
    };
    const double k2 = static_cast<double>(kKernel * kKernel);
    glorot(slots_[0], k2 * static_cast<double>(shape_.channels), k2 * kConv1Filters);
    glorot(slots_[2], k2 * kConv1Filters, k2 * kConv2Filters);
    glorot(slots_[4], kConv2Filters, kHidden);
    glorot(slots_[6], kHidden, kClasses);
    for (std::size_t s : {1u, 3u, 5u, 7u}) {
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(slots_[s].offset), slots_[s].size, T{0});
    }
  }

  /// Intermediate activations of one forward pass, reused by backward().
  struct Workspace {
    std::vector<T> pad0, z1, pool1, pad1, z2, pool2;
    std::vector<std::uint32_t> arg1, arg2;
    std::array<T, kConv2Filters> gap{};
    std::array<T, kHidden> hidden_pre{}, hidden{};
    std::array<T, kClasses> logits{}, probs{};
    // backward scratch
    std::vector<T> d_pad1, d_z1, d_z2, acc;
  };

  /// Forward pass on one CHW input; fills `ws.probs`.
  void forward(std::span<const T> input, Workspace& ws) const {
    check_input(input);
    const std::size_t C = shape_.channels, H = shape_.height, W = shape_.width;
    const std::size_t H2 = H / 2, W2 = W / 2, H4 = H / 4, W4 = W / 4;

    pad_into(input, C, H, W, ws.pad0);
    convolve(ws.pad0, C, H, W, slot_data(0), slot_data(1), kConv1Filters, ws.z1);
    relu_maxpool(ws.z1, kConv1Filters, H, W, ws.pool1, ws.arg1);

    pad_into(ws.pool1, kConv1Filters, H2, W2, ws.pad1);
    convolve(ws.pad1, kConv1Filters, H2, W2, slot_data(2), slot_data(3), kConv2Filters, ws.z2);
    relu_maxpool(ws.z2, kConv2Filters, H2, W2, ws.pool2, ws.arg2);

    const std::size_t plane = H4 * W4;
    for (std::size_t f = 0; f < kConv2Filters; ++f) {
      T sum = 0;
      const T* p = ws.pool2.data() + f * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
      ws.gap[f] = sum / static_cast<T>(plane);
    }

    const T* w3 = slot_data(4);
    const T* b3 = slot_data(5);
    for (std::size_t j = 0; j < kHidden; ++j) {
      T sum = b3[j];
      for (std::size_t f = 0; f < kConv2Filters; ++f) sum += w3[j * kConv2Filters + f] * ws.gap[f];
      ws.hidden_pre[j] = sum;
      ws.hidden[j] = sum > T{0} ? sum : T{0};
    }

    const T* w4 = slot_data(6);
    const T* b4 = slot_data(7);
    for (std::size_t k = 0; k < kClasses; ++k) {
      T sum = b4[k];
      for (std::size_t j = 0; j < kHidden; ++j) sum += w4[k * kHidden + j] * ws.hidden[j];
      ws.logits[k] = sum;
    }
    ws.probs = ws.logits;
    softmax_inplace(std::span<T>(ws.probs));
  }

  EmotionProbabilities predict(std::span<const T> input) const {
    Workspace ws;
    forward(input, ws);
    EmotionProbabilities out{};
    for (std::size_t k = 0; k < kClasses; ++k) out[k] = static_cast<double>(ws.probs[k]);
    return out;
  }

  /// Accumulates `scale * dLoss/dParams` for the cross-entropy of the sample
  /// last passed to forward(). Returns that sample's loss.
  T backward(std::span<const T> input, int label, Workspace& ws, std::span<T> grad, T scale) const {
    (void)input;
    if (grad.size() != total_) throw Error(ErrorCode::ShapeMismatch, "gradient buffer size");
    const auto cls = static_cast<std::size_t>(code_of(emotion_from_code(label)));
    const std::size_t H = shape_.height, W = shape_.width;
    const std::size_t H2 = H / 2, W2 = W / 2, H4 = H / 4, W4 = W / 4;

    std::array<T, kClasses> d_logits{};
    for (std::size_t k = 0; k < kClasses; ++k) {
      d_logits[k] = scale * (ws.probs[k] - (k == cls ? T{1} : T{0}));
    }

    // dense2
    const T* w4 = slot_data(6);
    T* gw4 = grad.data() + slots_[6].offset;
    T* gb4 = grad.data() + slots_[7].offset;
    std::array<T, kHidden> d_hidden{};
    for (std::size_t k = 0; k < kClasses; ++k) {
      gb4[k] += d_logits[k];
      for (std::size_t j = 0; j < kHidden; ++j) {
        gw4[k * kHidden + j] += d_logits[k] * ws.hidden[j];
        d_hidden[j] += w4[k * kHidden + j] * d_logits[k];
      }
    }

    // dense1
    const T* w3 = slot_data(4);
    T* gw3 = grad.data() + slots_[4].offset;
    T* gb3 = grad.data() + slots_[5].offset;
    std::array<T, kConv2Filters> d_gap{};
    for (std::size_t j = 0; j < kHidden; ++j) {
      const T d = ws.hidden_pre[j] > T{0} ? d_hidden[j] : T{0};
      if (d == T{0}) continue;
      gb3[j] += d;
      for (std::size_t f = 0; f < kConv2Filters; ++f) {
        gw3[j * kConv2Filters + f] += d * ws.gap[f];
        d_gap[f] += w3[j * kConv2Filters + f] * d;
      }
    }

    // global average pool + maxpool2 + relu of conv2
    ws.d_z2.assign(kConv2Filters * H2 * W2, T{0});
    const std::size_t plane4 = H4 * W4;
    for (std::size_t f = 0; f < kConv2Filters; ++f) {
      const T d = d_gap[f] / static_cast<T>(plane4);
      for (std::size_t i = 0; i < plane4; ++i) {
        const std::uint32_t src = ws.arg2[f * plane4 + i];
        if (ws.z2[src] > T{0}) ws.d_z2[src] += d;
      }
    }

    conv_backward(ws.pad1, kConv1Filters, H2, W2, slot_data(2), ws.d_z2, kConv2Filters,
                  grad.data() + slots_[2].offset, grad.data() + slots_[3].offset, &ws.d_pad1, ws.acc);

    // maxpool1 + relu of conv1, reading the interior of d_pad1
    ws.d_z1.assign(kConv1Filters * H * W, T{0});
    const std::size_t plane2 = H2 * W2;
    const std::size_t pw = W2 + 2;
    for (std::size_t c = 0; c < kConv1Filters; ++c) {
      for (std::size_t y = 0; y < H2; ++y) {
        for (std::size_t x = 0; x < W2; ++x) {
          const T d = ws.d_pad1[(c * (H2 + 2) + y + 1) * pw + x + 1];
          const std::uint32_t src = ws.arg1[c * plane2 + y * W2 + x];
          if (ws.z1[src] > T{0}) ws.d_z1[src] += d;
        }
      }
    }

    conv_backward(ws.pad0, shape_.channels, H, W, slot_data(0), ws.d_z1, kConv1Filters,
                  grad.data() + slots_[0].offset, grad.data() + slots_[1].offset, nullptr, ws.acc);

    return -std::log(std::max(ws.probs[cls], static_cast<T>(kProbabilityFloor)));
  }

  /// Mean cross-entropy over a batch; with a non-empty `grad` (zeroed here)
  /// also writes the mean gradient.
  T loss_and_gradient(std::span<const std::span<const T>> inputs, std::span<const int> labels,
                      std::span<T> grad, Workspace& ws) const {
    if (inputs.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "inputs vs labels");
    if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "empty batch");
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), T{0});
    const T scale = T{1} / static_cast<T>(inputs.size());
    T total = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      forward(inputs[i], ws);
      if (want_grad) {
        total += backward(inputs[i], labels[i], ws, grad, scale);
      } else {
        const auto cls = static_cast<std::size_t>(code_of(emotion_from_code(labels[i])));
        total += -std::log(std::max(ws.probs[cls], static_cast<T>(kProbabilityFloor)));
      }
    }
    return total * scale;
  }

  T loss(std::span<const std::span<const T>> inputs, std::span<const int> labels) const {
    Workspace ws;
    return loss_and_gradient(inputs, labels, {}, ws);
  }

 private:
  void add_slot(std::string name, std::vector<std::size_t> dims) {
    std::size_t size = 1;
    for (auto d : dims) size *= d;
    slots_.push_back(TensorSlot{std::move(name), std::move(dims), total_, size});
    total_ += size;
  }

  const T* slot_data(std::size_t index) const { return params_.data() + slots_[index].offset; }

  void check_input(std::span<const T> input) const {
    if (input.size() != shape_.input_size()) {
      throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(input.size()) +
                                                " values, model expects " +
                                                std::to_string(shape_.input_size()));
    }
  }

  static void pad_into(std::span<const T> src, std::size_t C, std::size_t H, std::size_t W,
                       std::vector<T>& dst) {
    const std::size_t ph = H + 2, pw = W + 2;
    dst.assign(C * ph * pw, T{0});
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t y = 0; y < H; ++y) {
        std::copy_n(src.data() + (c * H + y) * W, W, dst.data() + (c * ph + y + 1) * pw + 1);
      }
    }
  }

  /// Same-padded 3x3 convolution from a padded input. Output is pre-activation.
  static void convolve(const std::vector<T>& pad, std::size_t C, std::size_t H, std::size_t W,
                       const T* weight, const T* bias, std::size_t F, std::vector<T>& out) {
    const std::size_t ph = H + 2, pw = W + 2;
    out.resize(F * H * W);
    for (std::size_t f = 0; f < F; ++f) {
      T* o = out.data() + f * H * W;
      std::fill_n(o, H * W, bias[f]);
      for (std::size_t c = 0; c < C; ++c) {
        const T* in = pad.data() + c * ph * pw;
        const T* k = weight + (f * C + c) * kKernel * kKernel;
        for (std::size_t ky = 0; ky < kKernel; ++ky) {
          for (std::size_t kx = 0; kx < kKernel; ++kx) {
            const T w = k[ky * kKernel + kx];
            for (std::size_t y = 0; y < H; ++y) {
              T* orow = o + y * W;
              const T* irow = in + (y + ky) * pw + kx;
              for (std::size_t x = 0; x < W; ++x) orow[x] += w * irow[x];
            }
          }
        }
      }
    }
  }

  /// ReLU followed by 2x2/2 max pooling; records the flat source index of each
  /// pooled value (first maximum wins).
  static void relu_maxpool(const std::vector<T>& z, std::size_t F, std::size_t H, std::size_t W,
                           std::vector<T>& out, std::vector<std::uint32_t>& arg) {
    const std::size_t Ho = H / 2, Wo = W / 2;
    out.resize(F * Ho * Wo);
    arg.resize(F * Ho * Wo);
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t y = 0; y < Ho; ++y) {
        for (std::size_t x = 0; x < Wo; ++x) {
          std::size_t best = (f * H + 2 * y) * W + 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = (f * H + 2 * y + dy) * W + 2 * x + dx;
              if (z[idx] > z[best]) best = idx;
            }
          }
          const std::size_t o = (f * Ho + y) * Wo + x;
          out[o] = z[best] > T{0} ? z[best] : T{0};
          arg[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }

  /// Gradients of a same-padded 3x3 convolution. Accumulates into the weight
  /// and bias gradients; when `d_pad` is given, also writes the gradient with
  /// respect to the padded input.
  static void conv_backward(const std::vector<T>& pad, std::size_t C, std::size_t H, std::size_t W,
                            const T* weight, const std::vector<T>& d_out, std::size_t F, T* g_weight,
                            T* g_bias, std::vector<T>* d_pad, std::vector<T>& acc) {
    const std::size_t ph = H + 2, pw = W + 2;
    if (d_pad != nullptr) d_pad->assign(C * ph * pw, T{0});
    acc.resize(W);
    for (std::size_t f = 0; f < F; ++f) {
      const T* d = d_out.data() + f * H * W;
      T bias_sum = 0;
      for (std::size_t i = 0; i < H * W; ++i) bias_sum += d[i];
      g_bias[f] += bias_sum;
      for (std::size_t c = 0; c < C; ++c) {
        const T* in = pad.data() + c * ph * pw;
        const T* k = weight + (f * C + c) * kKernel * kKernel;
        T* gk = g_weight + (f * C + c) * kKernel * kKernel;
        T* dp = d_pad != nullptr ? d_pad->data() + c * ph * pw : nullptr;
        for (std::size_t ky = 0; ky < kKernel; ++ky) {
          for (std::size_t kx = 0; kx < kKernel; ++kx) {
            // Lane-wise accumulation keeps the inner loop vectorizable.
            std::fill(acc.begin(), acc.end(), T{0});
            const T w = k[ky * kKernel + kx];
            for (std::size_t y = 0; y < H; ++y) {
              const T* drow = d + y * W;
              const T* irow = in + (y + ky) * pw + kx;
              T* a = acc.data();
              for (std::size_t x = 0; x < W; ++x) a[x] += drow[x] * irow[x];
              if (dp != nullptr) {
                T* prow = dp + (y + ky) * pw + kx;
                for (std::size_t x = 0; x < W; ++x) prow[x] += w * drow[x];
              }
            }
            T sum = 0;
            for (std::size_t x = 0; x < W; ++x) sum += acc[x];
            gk[ky * kKernel + kx] += sum;
          }
        }
      }
    }
  }

  CnnShape shape_;
  std::uint64_t seed_ = 0;
  std::vector<TensorSlot> slots_;
  std::size_t total_ = 0;
  std::vector<T> params_;
};

}  // namespace classroom
