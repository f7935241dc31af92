#pragma once

#include <array>
#include <cstddef>
#include <cstdio>
#include <string>
#include <span>

#include "classroom/emotion/emotion_class.hpp"
#include "classroom/error.hpp"

namespace classroom {

using ConfusionMatrix = std::array<std::array<std::size_t, kNumEmotions>, kNumEmotions>;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// Classification report: rows of `confusion` are true classes, columns predictions.
struct MetricsReport {
  std::array<ClassMetrics, kNumEmotions> per_class{};
  AveragedMetrics macro;
  AveragedMetrics weighted;
  double accuracy = 0.0;
  ConfusionMatrix confusion{};
};

inline double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

inline double harmonic_f1(double precision, double recall) {
  return precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

/// Unweighted and support-weighted means over per-class rows.
inline void average_rows(std::span<const ClassMetrics> rows, AveragedMetrics& macro,
                         AveragedMetrics& weighted) {
  macro = {};
  weighted = {};
  std::size_t total = 0;
  for (const auto& r : rows) total += r.support;
  for (const auto& r : rows) {
    macro.precision += r.precision;
    macro.recall += r.recall;
    macro.f1 += r.f1;
    const double w = static_cast<double>(r.support);
    weighted.precision += w * r.precision;
    weighted.recall += w * r.recall;
    weighted.f1 += w * r.f1;
  }
  const double n = static_cast<double>(rows.size());
  macro.precision /= n;
  macro.recall /= n;
  macro.f1 /= n;
  macro.support = total;
  weighted.precision = safe_ratio(weighted.precision, static_cast<double>(total));
  weighted.recall = safe_ratio(weighted.recall, static_cast<double>(total));
  weighted.f1 = safe_ratio(weighted.f1, static_cast<double>(total));
  weighted.support = total;
}

inline MetricsReport report_from_confusion(const ConfusionMatrix& confusion) {
  MetricsReport report;
  report.confusion = confusion;
  std::size_t total = 0, correct = 0;
  for (std::size_t t = 0; t < kNumEmotions; ++t) {
    for (std::size_t p = 0; p < kNumEmotions; ++p) total += confusion[t][p];
    correct += confusion[t][t];
  }
  if (total == 0) throw Error(ErrorCode::EmptyDataset, "no predictions to score");
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    std::size_t predicted = 0, actual = 0;
    for (std::size_t k = 0; k < kNumEmotions; ++k) {
      predicted += confusion[k][c];
      actual += confusion[c][k];
    }
    const double tp = static_cast<double>(confusion[c][c]);
    auto& m = report.per_class[c];
    m.precision = safe_ratio(tp, static_cast<double>(predicted));
    m.recall = safe_ratio(tp, static_cast<double>(actual));
    m.f1 = harmonic_f1(m.precision, m.recall);
    m.support = actual;
  }
  average_rows(report.per_class, report.macro, report.weighted);
  report.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return report;
}

/// Scores predicted codes against true codes.
inline MetricsReport score_predictions(std::span<const int> true_codes, std::span<const int> predicted_codes) {
  if (true_codes.size() != predicted_codes.size()) {
    throw Error(ErrorCode::LengthMismatch, "label and prediction counts differ");
  }
  if (true_codes.empty()) throw Error(ErrorCode::EmptyDataset, "empty test set");
  ConfusionMatrix confusion{};
  for (std::size_t i = 0; i < true_codes.size(); ++i) {
    const auto t = static_cast<std::size_t>(code_of(emotion_from_code(true_codes[i])));
    const auto p = static_cast<std::size_t>(code_of(emotion_from_code(predicted_codes[i])));
    ++confusion[t][p];
  }
  return report_from_confusion(confusion);
}

/// Plain-text report in the familiar precision/recall/f1/support layout.
inline std::string format_report(const MetricsReport& r) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s%10s%10s%10s%10s\n", "", "precision", "recall", "f1-score", "support");
  out += line;
  for (EmotionClass e : kAllEmotions) {
    const auto& m = r.per_class[static_cast<std::size_t>(code_of(e))];
    std::snprintf(line, sizeof line, "%-14s%10.2f%10.2f%10.2f%10zu\n", std::string(label_of(e)).c_str(), m.precision,
                  m.recall, m.f1, m.support);
    out += line;
  }
  std::snprintf(line, sizeof line, "\n%-14s%30.2f%10zu\n", "accuracy", r.accuracy, r.macro.support);
  out += line;
  for (const auto& [name, avg] : {std::pair{"macro avg", &r.macro}, std::pair{"weighted avg", &r.weighted}}) {
    std::snprintf(line, sizeof line, "%-14s%10.2f%10.2f%10.2f%10zu\n", name, avg->precision, avg->recall, avg->f1,
                  avg->support);
    out += line;
  }
  out += "\nconfusion (rows true, columns predicted)\n";
  for (std::size_t t = 0; t < kNumEmotions; ++t) {
    std::snprintf(line, sizeof line, "%-14s", std::string(label_of(static_cast<EmotionClass>(t))).c_str());
    out += line;
    for (std::size_t p = 0; p < kNumEmotions; ++p) {
      std::snprintf(line, sizeof line, "%8zu", r.confusion[t][p]);
      out += line;
    }
    out += '\n';
  }
  return out;
}

}  // namespace classroom
