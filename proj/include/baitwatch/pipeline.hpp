#pragma once

// Training loop, batch scoring and evaluation of the neural detectors.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "baitwatch/encoders.hpp"
#include "baitwatch/metrics.hpp"

namespace baitwatch {

struct TrainConfig {
  ModelKind kind = ModelKind::ahde;
  bool ip = true;
  ModelDims dims;
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  // Applied to training instances only; scoring always reads the full text.
  std::size_t max_unit_tokens = 200;
  std::size_t max_units = 40;
  // Evaluate on dev every this many epochs (and always after the last one).
  std::size_t eval_every = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;   // NaN when not evaluated
  double dev_auroc = 0.0;  // NaN when not evaluated or dev is single-class
};

template <typename T>
struct TrainResult {
  Model<T> best;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 = the initialization
  bool diverged = false;
  std::string message;
};

// Training instances: one per article, or one per paragraph under IP, with
// the configured truncation.
std::vector<std::pair<Document, int>> training_instances(std::span<const Article> articles, const TrainConfig& config,
                                                         const SentenceSplitter& splitter);

// Minimizes mean binary cross-entropy with Adam and global-norm clipping,
// reshuffling each epoch from the seed. Keeps the parameters with the best
// dev AUROC (the latest epoch when dev cannot be ranked). A non-finite loss
// or gradient stops training; the result then holds the last good model.
template <typename T>
TrainResult<T> train(const TrainConfig& config, std::span<const Article> train_set, std::span<const Article> dev_set,
                     const SentenceSplitter& splitter = {},
                     const std::function<void(const EpochRecord&)>& on_epoch = {});

template <typename T>
std::vector<double> score_articles(const Model<T>& model, std::span<const Article> articles,
                                   const SentenceSplitter& splitter = {});

// Mean binary cross-entropy of probabilities against labels.
double mean_log_loss(std::span<const double> scores, std::span<const int> labels);

// Labels of articles; throws if any is unlabeled.
std::vector<int> labels_of(std::span<const Article> articles);

void write_history_csv(const std::string& path, std::span<const EpochRecord> history);

}  // namespace baitwatch
