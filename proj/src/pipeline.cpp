#include "baitwatch/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "baitwatch/datagen.hpp"
#include "baitwatch/optim.hpp"
#include "baitwatch/random.hpp"

namespace baitwatch {

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw std::invalid_argument("learning rate must be positive");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
  if (max_unit_tokens == 0 || max_units == 0) throw std::invalid_argument("truncation limits must be positive");
  if (eval_every == 0) throw std::invalid_argument("eval cadence must be positive");
  Model<float>::layout(kind, dims);  // throws on bad dimensions
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {{"model", std::string(to_string(kind))},
          {"ip", ip},
          {"vocab_size", dims.vocab_size},
          {"embedding", dims.embedding},
          {"word_hidden", dims.word_hidden},
          {"paragraph_hidden", dims.paragraph_hidden},
          {"attention", dims.attention},
          {"conv_filters", dims.conv_filters},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"learning_rate", learning_rate},
          {"clip_norm", clip_norm},
          {"seed", seed},
          {"max_unit_tokens", max_unit_tokens},
          {"max_units", max_units},
          {"eval_every", eval_every}};
}

std::vector<int> labels_of(std::span<const Article> articles) {
  std::vector<int> out;
  out.reserve(articles.size());
  for (const auto& a : articles) {
    if (!a.label) throw std::invalid_argument("article '" + a.id + "' has no label");
    out.push_back(*a.label);
  }
  return out;
}

std::vector<std::pair<Document, int>> training_instances(std::span<const Article> articles, const TrainConfig& config,
                                                         const SentenceSplitter& splitter) {
  auto truncate = [&](Document doc) {
    if (doc.units.size() > config.max_units) doc.units.resize(config.max_units);
    for (auto& u : doc.units) {
      if (u.size() > config.max_unit_tokens) u.resize(config.max_unit_tokens);
    }
    return doc;
  };
  std::vector<std::pair<Document, int>> out;
  if (config.ip) {
    const auto labels = labels_of(articles);
    auto instances = ip_transform(articles, is_hierarchical(config.kind) ? &splitter : nullptr);
    out.reserve(instances.size());
    for (auto& inst : instances) out.emplace_back(truncate(std::move(inst.doc)), inst.label);
  } else {
    for (const auto& a : articles) {
      if (!a.label) throw std::invalid_argument("article '" + a.id + "' has no label");
      out.emplace_back(truncate(Document{a.headline, a.paragraphs}), *a.label);
    }
  }
  return out;
}

template <typename T>
std::vector<double> score_articles(const Model<T>& model, std::span<const Article> articles,
                                   const SentenceSplitter& splitter) {
  std::vector<double> out;
  out.reserve(articles.size());
  for (const auto& a : articles) out.push_back(score_article(model, a, splitter).score);
  return out;
}

double mean_log_loss(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) throw std::invalid_argument("mean_log_loss: bad input sizes");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total -= std::log(labels[i] == 1 ? scores[i] : 1.0 - scores[i]);
  return total / static_cast<double>(scores.size());
}

template <typename T>
TrainResult<T> train(const TrainConfig& config, std::span<const Article> train_set, std::span<const Article> dev_set,
                     const SentenceSplitter& splitter, const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  auto model = Model<T>::create(config.kind, config.dims, config.ip, config.seed);
  TrainResult<T> result{model, {}, 0, false, {}};
  if (config.epochs == 0) return result;

  auto instances = training_instances(train_set, config, splitter);
  if (instances.empty()) throw std::invalid_argument("empty training set");
  const auto dev_labels = labels_of(dev_set);
  const bool dev_ranked = std::count(dev_labels.begin(), dev_labels.end(), 1) > 0 &&
                          std::count(dev_labels.begin(), dev_labels.end(), 0) > 0;

  auto params = model.parameters();
  std::span<const ad::NamedParameter<T>> param_span(params);
  ad::OptimizerState<T> optimizer;
  optimizer.config.learning_rate = config.learning_rate;
  ad::Gradients<T> grads;
  ad::Graph<T> graph;
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  double best_auroc = -1.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  try {
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
      rng.shuffle(std::span<std::size_t>(order));
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const auto end = std::min(order.size(), start + config.batch_size);
        grads.zero();
        for (std::size_t i = start; i < end; ++i) {
          const auto& [doc, label] = instances[order[i]];
          graph.clear();
          const auto loss = ad::bce_with_logits(model.logit(graph, doc), static_cast<T>(label));
          const double value = static_cast<double>(loss.item());
          if (!std::isfinite(value)) {
            throw ad::DivergenceError("divergence: non-finite loss in epoch " + std::to_string(epoch) +
                                      "; try a lower learning rate");
          }
          epoch_loss += value;
          graph.backward(loss, grads);
        }
        const T scale = T(1) / static_cast<T>(end - start);
        for (const auto& p : params) {
          for (auto& g : grads.of(*p.param).data) g *= scale;
        }
        ad::clip_gradients(param_span, grads, config.clip_norm);
        ad::adam_step(optimizer, param_span, grads);
      }

      EpochRecord rec{epoch, epoch_loss / static_cast<double>(instances.size()), nan, nan};
      const bool evaluate_now = !dev_set.empty() && (epoch % config.eval_every == 0 || epoch == config.epochs);
      if (evaluate_now) {
        const auto scores = score_articles(model, dev_set, splitter);
        rec.dev_loss = mean_log_loss(scores, dev_labels);
        if (dev_ranked) rec.dev_auroc = auroc(scores, dev_labels);
      }
      const bool improved = dev_ranked ? (evaluate_now && rec.dev_auroc > best_auroc) : true;
      if (improved) {
        if (dev_ranked) best_auroc = rec.dev_auroc;
        result.best = model;
        result.best_epoch = epoch;
      }
      result.history.push_back(rec);
      if (on_epoch) on_epoch(rec);
    }
  } catch (const ad::DivergenceError& e) {
    result.diverged = true;
    result.message = e.what();
  }
  return result;
}

void write_history_csv(const std::string& path, std::span<const EpochRecord> history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "epoch,train_loss,dev_loss,dev_auroc\n";
  auto cell = [&](double v) -> std::ostream& {
    if (std::isnan(v)) return out;  // empty cell
    return out << v;
  };
  for (const auto& r : history) {
    out << r.epoch << ',';
    cell(r.train_loss) << ',';
    cell(r.dev_loss) << ',';
    cell(r.dev_auroc) << '\n';
  }
}

template TrainResult<float> train<float>(const TrainConfig&, std::span<const Article>, std::span<const Article>,
                                         const SentenceSplitter&, const std::function<void(const EpochRecord&)>&);
template TrainResult<double> train<double>(const TrainConfig&, std::span<const Article>, std::span<const Article>,
                                           const SentenceSplitter&, const std::function<void(const EpochRecord&)>&);
template std::vector<double> score_articles<float>(const Model<float>&, std::span<const Article>,
                                                   const SentenceSplitter&);
template std::vector<double> score_articles<double>(const Model<double>&, std::span<const Article>,
                                                    const SentenceSplitter&);

}  // namespace baitwatch
