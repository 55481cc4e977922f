#include "baitwatch/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "baitwatch/hashing.hpp"

namespace baitwatch {

using nlohmann::ordered_json;

void GenConfig::validate() const {
  if (donor_min < 1 || donor_min > donor_max) {
    throw std::invalid_argument("donor run length requires 1 <= donor_min <= donor_max");
  }
  double sum = 0.0;
  for (double f : split_fractions) {
    if (!(f > 0.0)) throw std::invalid_argument("split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");
  if (category_match && cross_category) {
    throw std::invalid_argument("category_match and cross_category are mutually exclusive");
  }
}

ordered_json GenConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["donor_min"] = donor_min;
  j["donor_max"] = donor_max;
  j["mode"] = to_string(mode);
  j["category_match"] = category_match;
  j["cross_category"] = cross_category;
  j["split_fractions"] = split_fractions;
  j["advert_blocklist_path"] = advert_blocklist_path ? ordered_json(*advert_blocklist_path) : ordered_json(nullptr);
  j["per_class"] = per_class ? ordered_json(*per_class) : ordered_json(nullptr);
  return j;
}

Article implant(const Article& target, const Article& donor, std::size_t donor_start, std::size_t count,
                std::size_t position, InsertionMode mode) {
  if (count == 0 || donor_start + count > donor.paragraphs.size()) throw std::invalid_argument("donor exhausted");
  const auto n = target.paragraphs.size();
  if (mode == InsertionMode::insert ? position > n : position + count > n) {
    throw std::invalid_argument("insertion position out of range");
  }

  Article out = target;
  out.paragraphs.clear();
  out.paragraphs.reserve(n + count);
  const auto donor_begin = donor.paragraphs.begin() + static_cast<std::ptrdiff_t>(donor_start);
  const auto skip = mode == InsertionMode::replace ? count : 0;
  out.paragraphs.insert(out.paragraphs.end(), target.paragraphs.begin(),
                        target.paragraphs.begin() + static_cast<std::ptrdiff_t>(position));
  out.paragraphs.insert(out.paragraphs.end(), donor_begin, donor_begin + static_cast<std::ptrdiff_t>(count));
  out.paragraphs.insert(out.paragraphs.end(), target.paragraphs.begin() + static_cast<std::ptrdiff_t>(position + skip),
                        target.paragraphs.end());
  out.label = 1;
  out.provenance = Provenance{donor.id, donor_start, count, position, mode};
  return out;
}

Article generate_incongruent(const Article& target, const Article& donor, Rng& rng, const GenConfig& config) {
  if (donor.id == target.id) throw std::invalid_argument("donor and target must differ");
  if (config.category_match && donor.category != target.category) {
    throw std::invalid_argument("donor category '" + donor.category + "' does not match target '" + target.category + "'");
  }
  if (config.cross_category && donor.category == target.category) {
    throw std::invalid_argument("donor shares the target's category '" + target.category + "'");
  }
  std::size_t max_run = std::min(config.donor_max, donor.paragraphs.size());
  if (config.mode == InsertionMode::replace) max_run = std::min(max_run, target.paragraphs.size());
  if (max_run < config.donor_min) throw std::invalid_argument("donor exhausted");

  const auto count = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(config.donor_min),
                                                           static_cast<std::int64_t>(max_run)));
  const auto donor_start = rng.index(donor.paragraphs.size() - count + 1);
  const auto slots = config.mode == InsertionMode::insert ? target.paragraphs.size() + 1
                                                          : target.paragraphs.size() - count + 1;
  const auto position = rng.index(slots);
  return implant(target, donor, donor_start, count, position, config.mode);
}

// ---------------------------------------------------------------------------
// Advert filter

namespace {

std::string ngram_key(std::span<const TokenId> tokens) {
  return std::string(reinterpret_cast<const char*>(tokens.data()), tokens.size() * sizeof(TokenId));
}

}  // namespace

NgramBlocklist::NgramBlocklist(std::span<const TokenSeq> ngrams) {
  std::map<std::size_t, std::unordered_set<std::string>> grouped;
  for (const auto& g : ngrams) {
    if (g.empty()) throw std::invalid_argument("blocklist n-grams must have length >= 1");
    grouped[g.size()].insert(ngram_key(g));
  }
  for (auto& [len, keys] : grouped) by_length_.push_back({len, std::move(keys)});
}

NgramBlocklist NgramBlocklist::load(const std::string& path, const Vocabulary* vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read blocklist " + path);
  std::vector<TokenSeq> ngrams;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream words(line);
    std::string w;
    TokenSeq g;
    bool usable = true;
    while (words >> w) {
      if (vocab) {
        const auto id = vocab->id(w);
        if (id == kUnkId && w != kUnkToken) usable = false;
        g.push_back(id);
      } else {
        try {
          std::size_t used = 0;
          const auto id = std::stoul(w, &used);
          if (used != w.size()) throw std::invalid_argument(w);
          g.push_back(static_cast<TokenId>(id));
        } catch (const std::exception&) {
          throw CorpusFormatError(lineno, "blocklist entry '" + w + "' is not a token id");
        }
      }
    }
    if (usable && !g.empty()) ngrams.push_back(std::move(g));
  }
  return NgramBlocklist(ngrams);
}

bool NgramBlocklist::matches(std::span<const TokenId> tokens) const {
  for (const auto& bucket : by_length_) {
    if (bucket.length > tokens.size()) break;
    for (std::size_t i = 0; i + bucket.length <= tokens.size(); ++i) {
      if (bucket.keys.contains(ngram_key(tokens.subspan(i, bucket.length)))) return true;
    }
  }
  return false;
}

bool filter_advert(const Article& article, const NgramBlocklist& blocklist) {
  if (blocklist.empty()) return false;
  if (blocklist.matches(article.headline)) return true;
  return std::any_of(article.paragraphs.begin(), article.paragraphs.end(),
                     [&](const TokenSeq& p) { return blocklist.matches(p); });
}

// ---------------------------------------------------------------------------
// Dataset assembly

namespace {

struct TokenSeqHash {
  std::size_t operator()(const TokenSeq& s) const noexcept {
    return std::hash<std::string>{}(ngram_key(s));
  }
};

}  // namespace

std::string dataset_content_hash(const LabeledDataset& dataset) {
  std::string bytes;
  for (const auto* split : {&dataset.train, &dataset.dev, &dataset.test}) {
    for (const auto& a : *split) {
      bytes += to_json_line(a);
      bytes += '\n';
    }
  }
  return sha256_hex(bytes);
}

LabeledDataset build_dataset(std::span<const Article> corpus, const GenConfig& config, const NgramBlocklist& blocklist) {
  config.validate();
  const std::size_t per_class = config.per_class.value_or(corpus.size() / 2);
  if (per_class == 0) throw std::runtime_error("corpus too small: no articles per class");
  if (per_class > corpus.size()) {
    throw std::runtime_error("corpus too small: " + std::to_string(per_class) + " targets requested, " +
                             std::to_string(corpus.size()) + " articles available");
  }

  Rng rng(config.seed);
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span(order));

  // Donor pools, in corpus order for determinism.
  std::map<std::string, std::vector<std::size_t>> by_category;
  std::vector<std::size_t> all_donors;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].paragraphs.size() < config.donor_min) continue;
    all_donors.push_back(i);
    by_category[corpus[i].category].push_back(i);
  }

  std::vector<Article> incongruent;
  incongruent.reserve(per_class);
  std::unordered_set<TokenSeq, TokenSeqHash> positive_headlines;
  for (std::size_t k = 0; k < per_class; ++k) {
    const Article& target = corpus[order[k]];
    const auto& pool = config.category_match ? by_category[target.category] : all_donors;
    auto eligible = [&](std::size_t d) {
      return corpus[d].id != target.id && !(config.cross_category && corpus[d].category == target.category);
    };
    if (std::none_of(pool.begin(), pool.end(), eligible)) {
      throw std::runtime_error("no donor available for target '" + target.id + "' (category '" + target.category + "')");
    }
    std::size_t pick = pool[rng.index(pool.size())];
    while (!eligible(pick)) pick = pool[rng.index(pool.size())];
    const Article& donor = corpus[pick];
    incongruent.push_back(generate_incongruent(target, donor, rng, config));
    positive_headlines.insert(target.headline);
  }

  std::vector<Article> congruent;
  congruent.reserve(per_class);
  for (std::size_t k = per_class; k < order.size() && congruent.size() < per_class; ++k) {
    const Article& a = corpus[order[k]];
    if (positive_headlines.contains(a.headline) || filter_advert(a, blocklist)) continue;
    Article c = a;
    c.label = 0;
    c.provenance.reset();
    congruent.push_back(std::move(c));
  }
  if (congruent.size() < per_class) {
    throw std::runtime_error("insufficient eligible congruent articles: need " + std::to_string(per_class) +
                             ", found " + std::to_string(congruent.size()) + " (shortfall " +
                             std::to_string(per_class - congruent.size()) + ")");
  }

  const auto n_train = static_cast<std::size_t>(std::llround(config.split_fractions[0] * static_cast<double>(per_class)));
  const auto n_dev = std::min(per_class - n_train,
                              static_cast<std::size_t>(std::llround(config.split_fractions[1] * static_cast<double>(per_class))));
  const std::array<std::size_t, 3> bounds{n_train, n_train + n_dev, per_class};

  LabeledDataset ds;
  std::array<std::vector<Article>*, 3> splits{&ds.train, &ds.dev, &ds.test};
  std::size_t begin = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    auto& split = *splits[s];
    for (std::size_t i = begin; i < bounds[s]; ++i) {
      split.push_back(std::move(incongruent[i]));
      split.push_back(std::move(congruent[i]));
    }
    rng.shuffle(std::span(split));
    begin = bounds[s];
  }

  ordered_json counts;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto& split = *splits[s];
    const auto pos = static_cast<std::size_t>(std::count_if(split.begin(), split.end(), [](const Article& a) { return a.label == 1; }));
    counts[std::array{"train", "dev", "test"}[s]] = {{"total", split.size()}, {"incongruent", pos}, {"congruent", split.size() - pos}};
  }
  ds.manifest["config"] = config.to_json();
  ds.manifest["seed"] = config.seed;
  ds.manifest["source_articles"] = corpus.size();
  ds.manifest["counts"] = std::move(counts);
  ds.manifest["content_hash"] = dataset_content_hash(ds);
  return ds;
}

// ---------------------------------------------------------------------------
// Independent paragraphs

std::vector<IpInstance> ip_transform(std::span<const Article> articles, const SentenceSplitter* splitter) {
  std::vector<IpInstance> out;
  for (const auto& a : articles) {
    for (std::size_t p = 0; p < a.paragraphs.size(); ++p) {
      IpInstance inst;
      inst.article_id = a.id;
      inst.paragraph = p;
      inst.label = a.label.value_or(0);
      inst.doc.headline = a.headline;
      if (splitter) {
        inst.doc.units = (*splitter)(a.paragraphs[p]);
      } else {
        inst.doc.units = {a.paragraphs[p]};
      }
      out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<Article> ip_expand_articles(std::span<const Article> articles) {
  std::vector<Article> out;
  for (const auto& a : articles) {
    for (std::size_t p = 0; p < a.paragraphs.size(); ++p) {
      Article inst;
      inst.id = a.id + "#p" + std::to_string(p);
      inst.category = a.category;
      inst.headline = a.headline;
      inst.paragraphs = {a.paragraphs[p]};
      inst.label = a.label;
      out.push_back(std::move(inst));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

SyntheticCorpus make_synthetic_corpus(std::size_t n_articles, std::size_t n_topics, std::size_t words_per_topic,
                                      std::uint64_t seed) {
  if (n_topics < 2) throw std::invalid_argument("synthetic corpus needs at least 2 topics");
  if (words_per_topic < 1) throw std::invalid_argument("synthetic corpus needs at least 1 word per topic");

  std::vector<std::string> words;
  words.reserve(n_topics * words_per_topic);
  for (std::size_t t = 0; t < n_topics; ++t) {
    for (std::size_t w = 0; w < words_per_topic; ++w) words.push_back("t" + std::to_string(t) + "_w" + std::to_string(w));
  }

  // Zipf(1) cumulative weights over a topic's word ranks.
  std::vector<double> cdf(words_per_topic);
  double total = 0.0;
  for (std::size_t r = 0; r < words_per_topic; ++r) {
    total += 1.0 / static_cast<double>(r + 1);
    cdf[r] = total;
  }
  for (auto& c : cdf) c /= total;

  Rng rng(seed);
  auto draw = [&](std::size_t topic) {
    const double u = rng.unit();
    const auto rank = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    return static_cast<TokenId>(2 + topic * words_per_topic + std::min(rank, words_per_topic - 1));
  };
  auto sequence = [&](std::size_t topic, std::size_t lo, std::size_t hi) {
    TokenSeq s(static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi))));
    for (auto& tok : s) tok = draw(topic);
    return s;
  };

  SyntheticCorpus out{Vocabulary::from_tokens(words), {}, words_per_topic};
  out.articles.reserve(n_articles);
  const auto width = std::to_string(n_articles).size();
  for (std::size_t i = 0; i < n_articles; ++i) {
    const auto topic = rng.index(n_topics);
    Article a;
    auto num = std::to_string(i);
    a.id = "syn-" + std::string(width - num.size(), '0') + num;
    a.category = "topic" + std::to_string(topic);
    a.headline = sequence(topic, 5, 15);
    const auto n_paragraphs = static_cast<std::size_t>(rng.between(4, 12));
    for (std::size_t p = 0; p < n_paragraphs; ++p) a.paragraphs.push_back(sequence(topic, 20, 80));
    out.articles.push_back(std::move(a));
  }
  return out;
}

}  // namespace baitwatch
