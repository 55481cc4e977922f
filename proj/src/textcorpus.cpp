#include "baitwatch/textcorpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace baitwatch {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(InsertionMode mode) {
  return mode == InsertionMode::insert ? "insert" : "replace";
}

InsertionMode insertion_mode_from_string(std::string_view name) {
  if (name == "insert") return InsertionMode::insert;
  if (name == "replace") return InsertionMode::replace;
  throw std::invalid_argument("unknown insertion mode '" + std::string(name) + "'");
}

std::size_t Article::body_length() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.size();
  return n;
}

TokenSeq Article::flattened_body() const {
  TokenSeq out;
  out.reserve(body_length());
  for (const auto& p : paragraphs) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void validate(const Article& article) {
  if (article.headline.empty()) throw std::invalid_argument("article '" + article.id + "': empty headline");
  if (article.paragraphs.empty()) throw std::invalid_argument("article '" + article.id + "': no paragraphs");
  for (std::size_t i = 0; i < article.paragraphs.size(); ++i) {
    if (article.paragraphs[i].empty()) {
      throw std::invalid_argument("article '" + article.id + "': paragraph " + std::to_string(i) + " is empty");
    }
  }
  if (article.label && *article.label != 0 && *article.label != 1) {
    throw std::invalid_argument("article '" + article.id + "': label must be 0 or 1");
  }
}

// ---------------------------------------------------------------------------
// Tokenization

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) break;

    std::string chunk(text.substr(i, j - i));
    for (auto& c : chunk) {
      if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    std::size_t lo = 0;
    std::size_t hi = chunk.size();
    while (lo < hi && is_punct(static_cast<unsigned char>(chunk[lo]))) {
      out.emplace_back(1, chunk[lo]);
      ++lo;
    }
    std::size_t trail = hi;
    while (trail > lo && is_punct(static_cast<unsigned char>(chunk[trail - 1]))) --trail;
    if (trail > lo) out.emplace_back(chunk.substr(lo, trail - lo));
    for (std::size_t k = trail; k < hi; ++k) out.emplace_back(1, chunk[k]);
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  add(std::string(kPadToken));
  add(std::string(kUnkToken));
}

void Vocabulary::add(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  auto [it, inserted] = ids_.emplace(token, id);
  if (!inserted) throw std::invalid_argument("duplicate vocabulary token '" + token + "'");
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::from_tokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
  return tokens_[id];
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read vocabulary " + path);
  Vocabulary v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw CorpusFormatError(lineno, "expected token<TAB>id");
    const std::string token = line.substr(0, tab);
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw CorpusFormatError(lineno, "bad id");
    }
    if (id < 2) {
      if (token != v.tokens_[id]) throw CorpusFormatError(lineno, "reserved id " + std::to_string(id) + " must be " + v.tokens_[id]);
      continue;
    }
    if (id != v.tokens_.size()) throw CorpusFormatError(lineno, "ids must be contiguous and ascending");
    try {
      v.add(token);
    } catch (const std::invalid_argument& e) {
      throw CorpusFormatError(lineno, e.what());
    }
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary " + path);
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void VocabularyBuilder::add_text(std::string_view text) {
  const auto toks = tokenize(text);
  add_tokens(toks);
}

void VocabularyBuilder::add_tokens(std::span<const std::string> tokens) {
  for (const auto& t : tokens) ++counts_[t];
}

Vocabulary VocabularyBuilder::build(std::size_t min_count) const {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts_) {
    if (n >= min_count && tok != kPadToken && tok != kUnkToken) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocabulary::from_tokens(tokens);
}

Vocabulary build_vocabulary(std::span<const std::string> texts, std::size_t min_count) {
  VocabularyBuilder b;
  for (const auto& t : texts) b.add_text(t);
  return b.build(min_count);
}

TokenSeq encode(const Vocabulary& vocab, std::span<const std::string> tokens) {
  TokenSeq out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vocab.id(t));
  return out;
}

std::vector<std::string> decode(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(vocab.token(id));
  return out;
}

// ---------------------------------------------------------------------------
// Sentences

SentenceSplitter::SentenceSplitter(const Vocabulary& vocab) {
  for (std::string_view d : {".", "!", "?"}) {
    if (vocab.contains(d)) delimiters_.insert(vocab.id(d));
  }
}

std::vector<TokenSeq> SentenceSplitter::operator()(std::span<const TokenId> paragraph) const {
  std::vector<TokenSeq> out;
  TokenSeq current;
  for (auto id : paragraph) {
    current.push_back(id);
    if (delimiters_.contains(id)) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<TokenSeq> split_sentences(std::span<const TokenId> paragraph, const Vocabulary& vocab) {
  return SentenceSplitter(vocab)(paragraph);
}

// ---------------------------------------------------------------------------
// Statistics

void CorpusStatsAccumulator::Moments::push(double x) {
  ++n;
  const double delta = x - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (x - mean);
}

MeanStdErr CorpusStatsAccumulator::Moments::summary() const {
  if (n < 2) return {mean, 0.0};
  const double sd = std::sqrt(m2 / static_cast<double>(n - 1));
  return {mean, sd / std::sqrt(static_cast<double>(n))};
}

void CorpusStatsAccumulator::add(const Article& article) {
  ++articles_;
  headline_.push(static_cast<double>(article.headline.size()));
  body_.push(static_cast<double>(article.body_length()));
  paragraphs_.push(static_cast<double>(article.paragraphs.size()));
  for (const auto& p : article.paragraphs) paragraph_tokens_.push(static_cast<double>(p.size()));
}

CorpusStats CorpusStatsAccumulator::result() const {
  if (articles_ == 0) throw std::invalid_argument("empty corpus");
  return {articles_, headline_.summary(), body_.summary(), paragraphs_.summary(), paragraph_tokens_.summary()};
}

CorpusStats corpus_stats(std::span<const Article> corpus) {
  CorpusStatsAccumulator acc;
  for (const auto& a : corpus) acc.add(a);
  return acc.result();
}

// ---------------------------------------------------------------------------
// JSON Lines

std::string to_json_line(const Article& article) {
  ordered_json j;
  j["id"] = article.id;
  j["category"] = article.category;
  j["headline"] = article.headline;
  j["paragraphs"] = article.paragraphs;
  if (article.label) j["label"] = *article.label;
  if (article.provenance) {
    const auto& p = *article.provenance;
    ordered_json pj;
    pj["donor_id"] = p.donor_id;
    pj["donor_start"] = p.donor_start;
    pj["count"] = p.count;
    pj["position"] = p.position;
    pj["mode"] = to_string(p.mode);
    j["provenance"] = std::move(pj);
  }
  return j.dump();
}

namespace {

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing \"") + key + "\" field");
  return *it;
}

TokenSeq tokens_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array of integers");
  TokenSeq out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) throw std::invalid_argument(std::string(what) + " must hold non-negative integers");
    const auto x = v.get<std::uint64_t>();
    if (x > UINT32_MAX) throw std::invalid_argument(std::string(what) + " token id out of range");
    out.push_back(static_cast<TokenId>(x));
  }
  return out;
}

}  // namespace

Article article_from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("record must be a JSON object");

  Article a;
  const auto& id = require(j, "id");
  if (!id.is_string()) throw std::invalid_argument("\"id\" must be a string");
  a.id = id.get<std::string>();
  const auto& cat = require(j, "category");
  if (!cat.is_string()) throw std::invalid_argument("\"category\" must be a string");
  a.category = cat.get<std::string>();
  a.headline = tokens_from_json(require(j, "headline"), "headline");
  const auto& paras = require(j, "paragraphs");
  if (!paras.is_array()) throw std::invalid_argument("\"paragraphs\" must be an array");
  for (const auto& p : paras) a.paragraphs.push_back(tokens_from_json(p, "paragraph"));

  if (auto it = j.find("label"); it != j.end()) {
    if (!it->is_number_integer()) throw std::invalid_argument("\"label\" must be 0 or 1");
    a.label = it->get<int>();
  }
  if (auto it = j.find("provenance"); it != j.end()) {
    if (!it->is_object()) throw std::invalid_argument("\"provenance\" must be an object");
    Provenance p;
    p.donor_id = require(*it, "donor_id").get<std::string>();
    p.donor_start = require(*it, "donor_start").get<std::size_t>();
    p.count = require(*it, "count").get<std::size_t>();
    p.position = require(*it, "position").get<std::size_t>();
    p.mode = insertion_mode_from_string(require(*it, "mode").get<std::string>());
    a.provenance = std::move(p);
  }
  validate(a);
  return a;
}

CorpusReader::CorpusReader(const std::string& path) : in_(path), path_(path) {
  if (!in_) throw std::runtime_error("cannot read corpus " + path);
}

std::optional<Article> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.empty()) continue;
    try {
      return article_from_json_line(line);
    } catch (const std::invalid_argument& e) {
      throw CorpusFormatError(line_, e.what());
    } catch (const json::exception& e) {
      throw CorpusFormatError(line_, e.what());
    }
  }
  return std::nullopt;
}

CorpusWriter::CorpusWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw std::runtime_error("cannot write corpus " + path);
}

void CorpusWriter::write(const Article& article) {
  out_ << to_json_line(article) << '\n';
  if (!out_) throw std::runtime_error("write failed: " + path_);
}

void CorpusWriter::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("close failed: " + path_);
}

std::vector<Article> read_corpus(const std::string& path) {
  CorpusReader reader(path);
  std::vector<Article> out;
  while (auto a = reader.next()) out.push_back(std::move(*a));
  return out;
}

void write_corpus(const std::string& path, std::span<const Article> articles) {
  CorpusWriter w(path);
  for (const auto& a : articles) w.write(a);
  w.close();
}

}  // namespace baitwatch
