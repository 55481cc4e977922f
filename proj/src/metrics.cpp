#include "baitwatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace baitwatch {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length (" + std::to_string(scores.size()) + " vs " +
                                std::to_string(labels.size()) + ")");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("label at " + std::to_string(i) + " is not 0/1");
    if (std::isnan(scores[i])) throw std::invalid_argument("score at " + std::to_string(i) + " is NaN");
  }
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto n = scores.size();
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const auto negatives = n - positives;
  if (positives == 0 || negatives == 0) throw std::invalid_argument("auroc needs both classes");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie group shares the mean of its ranks.
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) positive_rank_sum += mid;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  if (scores.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<int>(scores[i] >= threshold) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double precision_at_n(std::span<const double> scores, std::span<const int> labels, std::size_t n) {
  check_inputs(scores, labels);
  if (n < 1 || n > scores.size()) {
    throw std::invalid_argument("precision@N: N=" + std::to_string(n) + " outside [1, " +
                                std::to_string(scores.size()) + "]");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += labels[order[i]] == 1;
  return static_cast<double>(hits) / static_cast<double>(n);
}

Confusion confusion_at(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs(scores, labels);
  Confusion c;
  c.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      ++(predicted ? c.true_positive : c.false_negative);
    } else {
      ++(predicted ? c.false_positive : c.true_negative);
    }
  }
  return c;
}

EvalReport evaluate(std::span<const double> scores, std::span<const int> labels) {
  EvalReport r;
  r.examples = scores.size();
  r.accuracy = accuracy(scores, labels);
  r.auroc = auroc(scores, labels);
  r.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  for (int t = 1; t <= 9; ++t) r.confusion.push_back(confusion_at(scores, labels, t / 10.0));
  for (std::size_t n : {10, 25, 50, 100, 250}) {
    if (n <= scores.size()) r.precision_at.emplace_back(n, precision_at_n(scores, labels, n));
  }
  return r;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["examples"] = examples;
  j["positives"] = positives;
  j["accuracy"] = accuracy;
  j["auroc"] = auroc;
  auto& conf = j["confusion"] = nlohmann::ordered_json::array();
  for (const auto& c : confusion) {
    conf.push_back({{"threshold", c.threshold},
                    {"tp", c.true_positive},
                    {"fp", c.false_positive},
                    {"tn", c.true_negative},
                    {"fn", c.false_negative}});
  }
  auto& prec = j["precision_at_n"] = nlohmann::ordered_json::object();
  for (const auto& [n, p] : precision_at) prec[std::to_string(n)] = p;
  return j;
}

}  // namespace baitwatch
