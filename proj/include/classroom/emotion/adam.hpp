#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "classroom/error.hpp"

namespace classroom {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 10;
  std::size_t batch_size = 32;

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error(ErrorCode::InvalidArgument, "beta1 must be in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error(ErrorCode::InvalidArgument, "beta2 must be in [0,1)");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be > 0");
    if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  }
};

/// Adam with bias-corrected moments. The first and second moment buffers live
/// here; parameters and gradients are flat spans of equal length.
template <typename T>
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t parameter_count, AdamConfig config)
      : config_(config), first_(parameter_count, T{0}), second_(parameter_count, T{0}) {
    config_.validate();
  }

  /// Applies update number `step_index` (1-based).
  void step(std::span<T> params, std::span<const T> gradients, long step_index) {
    if (params.size() != first_.size() || gradients.size() != first_.size()) {
      throw Error(ErrorCode::ShapeMismatch, "parameter/gradient size does not match optimizer state");
    }
    if (step_index < 1) throw Error(ErrorCode::InvalidArgument, "step index must be >= 1");
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    const T lr = static_cast<T>(config_.learning_rate);
    const T eps = static_cast<T>(config_.epsilon);
    const T correction1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(step_index)));
    const T correction2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(step_index)));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const T g = gradients[i];
      first_[i] = b1 * first_[i] + (T{1} - b1) * g;
      second_[i] = b2 * second_[i] + (T{1} - b2) * g * g;
      const T m_hat = first_[i] / correction1;
      const T v_hat = second_[i] / correction2;
      params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    steps_taken_ = step_index;
  }

  /// Applies the next update in sequence.
  void step(std::span<T> params, std::span<const T> gradients) {
    step(params, gradients, steps_taken_ + 1);
  }

  long steps_taken() const { return steps_taken_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<T> first_;
  std::vector<T> second_;
  long steps_taken_ = 0;
};

}  // namespace classroom
