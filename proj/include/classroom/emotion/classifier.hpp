#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "classroom/emotion/cnn.hpp"
#include "classroom/emotion/image.hpp"
#include "classroom/emotion/probabilities.hpp"

namespace classroom {

/// Inference contract the session engine depends on. Implementations must be
/// safe to call concurrently once constructed.
class EmotionClassifier {
 public:
  virtual ~EmotionClassifier() = default;
  virtual std::size_t channels() const = 0;
  virtual EmotionProbabilities predict(const ImageTensor& image) const = 0;
};

/// Wraps a finalized reference network; the parameters are immutable from here on.
class CnnClassifier final : public EmotionClassifier {
 public:
  explicit CnnClassifier(ReferenceCnn<float> model) : model_(std::move(model)) {}

  std::size_t channels() const override { return model_.shape().channels; }

  EmotionProbabilities predict(const ImageTensor& image) const override {
    if (image.channels != model_.shape().channels || image.height != model_.shape().height ||
        image.width != model_.shape().width) {
      throw Error(ErrorCode::ShapeMismatch, "image " + std::to_string(image.channels) + "x" +
                                                std::to_string(image.height) + "x" +
                                                std::to_string(image.width) + " does not fit the model");
    }
    return model_.predict(std::span<const float>(image.values));
  }

  const ReferenceCnn<float>& model() const { return model_; }

 private:
  ReferenceCnn<float> model_;
};

/// Full classification of one crop: probabilities, chosen class and its probability.
struct EmotionPrediction {
  EmotionClass emotion = EmotionClass::Boredom;
  double confidence = 0.0;
  EmotionProbabilities probabilities{};
};

inline EmotionPrediction classify_face(const EmotionClassifier& classifier, const RawImage& crop) {
  const ImageTensor tensor = preprocess_face(crop);
  EmotionPrediction out;
  out.probabilities = classifier.predict(tensor);
  out.emotion = argmax_emotion(out.probabilities);
  out.confidence = out.probabilities[static_cast<std::size_t>(code_of(out.emotion))];
  return out;
}

}  // namespace classroom
