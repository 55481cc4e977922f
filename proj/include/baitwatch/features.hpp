#pragma once

// Similarity-feature baseline: eight headline/body features scored by
// logistic regression.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "baitwatch/textcorpus.hpp"

namespace baitwatch {

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "tf_cosine",       "tfidf_cosine", "unigram_overlap", "bigram_overlap",
    "headline_length", "body_length",  "paragraph_count", "missing_headline_tokens"};

using FeatureVector = std::array<double, kFeatureCount>;

// Smoothed inverse document frequency, idf(t) = ln((1 + N) / (1 + df(t))) + 1,
// where each article (headline and body) is one document.
class IdfTable {
 public:
  static IdfTable fit(std::span<const Article> articles);
  static IdfTable from_json(const nlohmann::json& j);

  double idf(TokenId token) const;
  std::size_t documents() const { return documents_; }
  nlohmann::ordered_json to_json() const;

 private:
  std::size_t documents_ = 0;
  std::unordered_map<TokenId, std::size_t> df_;
};

// Throws std::invalid_argument on an empty headline or body. Bigrams do not
// cross paragraph boundaries.
FeatureVector extract_features(std::span<const TokenId> headline, std::span<const TokenSeq> body,
                               const IdfTable& idf);

struct LinearConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.5;
};

// Logistic regression over standardized inputs.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> loss_history;  // mean cross-entropy before each epoch's update

  double logit(std::span<const double> x) const;
  double predict(std::span<const double> x) const;

  nlohmann::ordered_json to_json() const;
  static LinearModel from_json(const nlohmann::json& j);
};

// Full-batch gradient descent on mean cross-entropy; the bias starts at the
// log-odds of the class prior and weights at zero, so the fit is
// deterministic. Throws std::invalid_argument unless both classes occur.
LinearModel train_linear(std::span<const std::vector<double>> features, std::span<const int> labels,
                         const LinearConfig& config = {});

// Feature baseline bundled with its idf table.
struct FeatureBaseline {
  IdfTable idf;
  LinearModel model;
  bool ip = false;

  // With ip, the maximum over per-paragraph scores.
  double score(const Article& article) const;
  std::vector<double> paragraph_scores(const Article& article) const;

  nlohmann::ordered_json to_json() const;
  static FeatureBaseline from_json(const nlohmann::json& j);
};

// Fits idf and the classifier on `train`. With ip, each paragraph is a
// training instance carrying its article's label.
FeatureBaseline train_feature_baseline(std::span<const Article> train, bool ip, const LinearConfig& config = {});

// Header "id,label,<feature names>"; label empty when absent.
void write_feature_csv(std::ostream& out, std::span<const Article> articles, const IdfTable& idf);

}  // namespace baitwatch
