#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ocugaze/ocular_features.hpp"

namespace ocugaze {

/// counts[i][j]: instances of true class i+1 predicted as class j+1.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kClassCount>, kClassCount> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t support(int cls) const;    // row sum
  std::uint64_t predicted(int cls) const;  // column sum

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws Error(parameter) on empty or unequal-length inputs.
ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred);

/// Fraction of positions where prediction equals truth.
double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  /// A zero denominator was replaced by a zero score.
  bool degenerate = false;
};

std::array<ClassScores, kClassCount> precision_recall_f1(const ConfusionMatrix& cm);

struct AverageScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct ClassificationReport {
  ConfusionMatrix confusion;
  std::array<ClassScores, kClassCount> per_class{};
  /// Classes that occur in the truth or the predictions; the averages run
  /// over these.
  std::array<bool, kClassCount> present{};
  double accuracy = 0.0;
  AverageScores macro;
  AverageScores weighted;

  /// Aligned text with precision / recall / f1-score / support columns.
  std::string to_text(int digits = 2) const;
  std::string to_json() const;
  /// Rebuilds a report from the "confusion" member of to_json() output.
  static ClassificationReport from_json(std::string_view text);

  friend bool operator==(const ClassificationReport& a, const ClassificationReport& b) {
    return a.confusion == b.confusion;
  }
};

ClassificationReport classification_report(std::span<const int> y_true, std::span<const int> y_pred);
/// Throws Error(parameter) on an empty matrix.
ClassificationReport classification_report(const ConfusionMatrix& cm);

/// Incremental builder for streaming evaluations.
class ReportAccumulator {
 public:
  void add(int y_true, int y_pred);
  std::size_t size() const { return confusion_.total(); }
  const ConfusionMatrix& confusion() const noexcept { return confusion_; }
  ClassificationReport report() const;

 private:
  ConfusionMatrix confusion_;
};

}  // namespace ocugaze
