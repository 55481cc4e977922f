#pragma once

// Ranking and thresholded classification metrics. Labels are 0/1.

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

namespace baitwatch {

// (correctly ordered positive/negative pairs + 0.5 * tied pairs) / (P * N),
// computed from mid-ranks. Throws std::invalid_argument unless both classes
// are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Fraction of items where (score >= threshold) equals the label.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

// Fraction of label 1 among the n highest scores; equal scores keep input
// order. Requires 1 <= n <= size.
double precision_at_n(std::span<const double> scores, std::span<const int> labels, std::size_t n);

struct Confusion {
  double threshold = 0.5;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;
};

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold);

struct EvalReport {
  std::size_t examples = 0;
  std::size_t positives = 0;
  double accuracy = 0.0;  // at 0.5
  double auroc = 0.0;
  std::vector<Confusion> confusion;  // thresholds 0.1, 0.2, ..., 0.9
  std::vector<std::pair<std::size_t, double>> precision_at;  // N in {10, 25, 50, 100, 250} that fit

  nlohmann::ordered_json to_json() const;
};

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels);

}  // namespace baitwatch
