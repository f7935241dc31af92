#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "classroom/error.hpp"

namespace classroom {

inline constexpr std::size_t kEmbeddingDim = 128;

/// A validated 128-dimensional face embedding. Construction from an arbitrary
/// sequence throws InvalidEmbedding unless the length is 128 and every entry is finite.
class Embedding {
 public:
  using Storage = std::array<double, kEmbeddingDim>;

  Embedding() { values_.fill(0.0); }

  explicit Embedding(std::span<const double> values) {
    if (values.size() != kEmbeddingDim) {
      throw Error(ErrorCode::InvalidEmbedding,
                  "expected " + std::to_string(kEmbeddingDim) + " values, got " +
                      std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
      if (!std::isfinite(values[i])) {
        throw Error(ErrorCode::InvalidEmbedding, "non-finite value at index " + std::to_string(i));
      }
      values_[i] = values[i];
    }
  }

  explicit Embedding(const std::vector<double>& values)
      : Embedding(std::span<const double>(values.data(), values.size())) {}

  std::span<const double, kEmbeddingDim> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const Embedding&) const = default;

 private:
  Storage values_;
};

/// Euclidean distance between two embeddings.
inline double distance(const Embedding& a, const Embedding& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

/// Raw-sequence overload; dimension mismatch or non-finite input is InvalidEmbedding.
inline double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::InvalidEmbedding, "dimension mismatch");
  }
  return distance(Embedding(a), Embedding(b));
}

}  // namespace classroom
