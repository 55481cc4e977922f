#pragma once

// Automatic construction of balanced incongruent/congruent datasets from an
// unlabeled corpus, and the independent-paragraph expansion.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "baitwatch/random.hpp"
#include "baitwatch/textcorpus.hpp"

namespace baitwatch {

struct GenConfig {
  std::uint64_t seed = 0;
  std::size_t donor_min = 1;
  std::size_t donor_max = 3;
  InsertionMode mode = InsertionMode::insert;
  bool category_match = true;
  // Donors must come from a different category than the target. Excludes
  // category_match.
  bool cross_category = false;
  std::array<double, 3> split_fractions{0.8, 0.1, 0.1};  // train, dev, test
  std::optional<std::string> advert_blocklist_path;
  // Articles per class; defaults to half the corpus.
  std::optional<std::size_t> per_class;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

struct LabeledDataset {
  std::vector<Article> train;
  std::vector<Article> dev;
  std::vector<Article> test;
  nlohmann::ordered_json manifest;
};

// Copies donor paragraphs [donor_start, donor_start + count) into the target
// at `position`. In replace mode the `count` target paragraphs starting at
// `position` are dropped first. The result carries label 1 and provenance.
Article implant(const Article& target, const Article& donor, std::size_t donor_start, std::size_t count,
                std::size_t position, InsertionMode mode);

// Samples run length, donor offset and insertion position, then implants.
// Throws std::invalid_argument("donor exhausted") when the donor is too short.
Article generate_incongruent(const Article& target, const Article& donor, Rng& rng, const GenConfig& config);

// Token n-grams whose contiguous occurrence marks an article as advertising.
class NgramBlocklist {
 public:
  NgramBlocklist() = default;
  explicit NgramBlocklist(std::span<const TokenSeq> ngrams);

  // One space-separated n-gram per line. With a vocabulary the words are
  // encoded and n-grams containing unknown words are dropped (they cannot
  // occur in an encoded corpus); without one each entry must be an integer id.
  static NgramBlocklist load(const std::string& path, const Vocabulary* vocab = nullptr);

  bool empty() const { return by_length_.empty(); }
  bool matches(std::span<const TokenId> tokens) const;

 private:
  struct Bucket {
    std::size_t length;
    std::unordered_set<std::string> keys;
  };
  std::vector<Bucket> by_length_;
};

// True when any blocklisted n-gram occurs in the headline or a paragraph.
bool filter_advert(const Article& article, const NgramBlocklist& blocklist);

// Throws std::runtime_error naming the shortfall when too few eligible
// articles exist.
LabeledDataset build_dataset(std::span<const Article> corpus, const GenConfig& config,
                             const NgramBlocklist& blocklist = {});

// Serialized bytes of all three splits, in order; the manifest's content hash
// covers exactly this.
std::string dataset_content_hash(const LabeledDataset& dataset);

struct IpInstance {
  std::string article_id;
  std::size_t paragraph = 0;
  int label = 0;
  Document doc;  // one paragraph, split into sentences when a splitter is given
};

// One instance per paragraph, in article then paragraph order.
std::vector<IpInstance> ip_transform(std::span<const Article> articles, const SentenceSplitter* splitter = nullptr);

// The same expansion as file records: one single-paragraph article per
// paragraph, id "<article id>#p<index>".
std::vector<Article> ip_expand_articles(std::span<const Article> articles);

struct SyntheticCorpus {
  Vocabulary vocab;
  std::vector<Article> articles;
  std::size_t words_per_topic = 0;
};

// Disjoint per-topic vocabularies; each article draws one topic, a 5-15 token
// headline and 4-12 paragraphs of 20-80 tokens from a Zipf distribution over
// that topic's words.
SyntheticCorpus make_synthetic_corpus(std::size_t n_articles, std::size_t n_topics, std::size_t words_per_topic,
                                      std::uint64_t seed);

}  // namespace baitwatch
