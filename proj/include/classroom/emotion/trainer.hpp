#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "classroom/emotion/adam.hpp"
#include "classroom/emotion/classifier.hpp"
#include "classroom/emotion/cnn.hpp"
#include "classroom/emotion/image.hpp"
#include "classroom/emotion/metrics.hpp"

namespace classroom {

enum class SplitTag { Train, Test };

struct LabeledImage {
  ImageTensor image;
  int code = 0;
};

struct LabeledDataset {
  std::vector<LabeledImage> items;
  SplitTag split = SplitTag::Train;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  /// NaN when training ran without a validation set.
  double validation_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainingResult {
  ReferenceCnn<float> model;
  std::vector<EpochStats> history;
};

namespace detail {

inline void check_dataset(const LabeledDataset& data, bool require_all_classes) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "dataset has no items");
  std::array<std::size_t, kNumEmotions> counts{};
  const auto& first = data.items.front().image;
  for (const auto& item : data.items) {
    ++counts[static_cast<std::size_t>(code_of(emotion_from_code(item.code)))];
    if (item.image.channels != first.channels || item.image.height != first.height ||
        item.image.width != first.width ||
        item.image.values.size() != first.channels * first.height * first.width) {
      throw Error(ErrorCode::ShapeMismatch, "dataset images differ in shape");
    }
  }
  if (require_all_classes) {
    for (std::size_t c = 0; c < kNumEmotions; ++c) {
      if (counts[c] == 0) {
        throw Error(ErrorCode::MissingClass,
                    "no samples of class " + std::string(label_of(static_cast<EmotionClass>(c))));
      }
    }
  }
}

}  // namespace detail

/// Predicted code for every item of a dataset.
inline std::vector<int> predict_codes(const EmotionClassifier& classifier, const LabeledDataset& data) {
  std::vector<int> out;
  out.reserve(data.size());
  for (const auto& item : data.items) out.push_back(code_of(argmax_emotion(classifier.predict(item.image))));
  return out;
}

inline MetricsReport evaluate(const EmotionClassifier& classifier, const LabeledDataset& test) {
  if (test.empty()) throw Error(ErrorCode::EmptyDataset, "test set is empty");
  std::vector<int> truth;
  truth.reserve(test.size());
  for (const auto& item : test.items) truth.push_back(item.code);
  const auto predicted = predict_codes(classifier, test);
  return score_predictions(truth, predicted);
}

inline MetricsReport evaluate(const ReferenceCnn<float>& model, const LabeledDataset& test) {
  return evaluate(CnnClassifier(model), test);
}

/// Mini-batch Adam on the reference network. Each epoch reshuffles with a
/// generator seeded once from `seed`; the last batch of an epoch may be short.
/// Loss and accuracy are accumulated over the epoch's batches as they run.
inline TrainingResult train(const LabeledDataset& dataset, const AdamConfig& config, std::uint64_t seed,
                            const LabeledDataset* validation = nullptr,
                            const std::function<void(const EpochStats&)>& on_epoch = {}) {
  config.validate();
  detail::check_dataset(dataset, true);
  const auto& first = dataset.items.front().image;
  ReferenceCnn<float> model(CnnShape{first.channels, first.height, first.width}, seed);
  AdamOptimizer<float> optimizer(model.parameter_count(), config);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<float> grad(model.parameter_count());
  ReferenceCnn<float>::Workspace ws;
  TrainingResult result{model, {}};

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const float scale = 1.0f / static_cast<float>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (std::size_t i = start; i < end; ++i) {
        const auto& item = dataset.items[order[i]];
        const std::span<const float> input(item.image.values);
        model.forward(input, ws);
        const std::size_t predicted = static_cast<std::size_t>(
            std::max_element(ws.probs.begin(), ws.probs.end()) - ws.probs.begin());
        if (static_cast<int>(predicted) == item.code) ++correct;
        loss_sum += model.backward(input, item.code, ws, grad, scale);
      }
      optimizer.step(model.parameters(), grad);
    }
    for (float p : model.parameters()) {
      if (!std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "training diverged: non-finite parameter");
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (validation != nullptr && !validation->empty()) {
      stats.validation_accuracy = evaluate(model, *validation).accuracy;
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  result.model = std::move(model);
  return result;
}

/// Per-epoch history as comma-separated text; validation accuracy is empty
/// when no validation set was given.
inline void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history) {
  out << "epoch,train_loss,train_accuracy,validation_accuracy\n";
  char line[128];
  for (const auto& h : history) {
    if (std::isnan(h.validation_accuracy)) {
      std::snprintf(line, sizeof line, "%d,%.6f,%.6f,\n", h.epoch, h.train_loss, h.train_accuracy);
    } else {
      std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f\n", h.epoch, h.train_loss, h.train_accuracy,
                    h.validation_accuracy);
    }
    out << line;
  }
}

}  // namespace classroom

