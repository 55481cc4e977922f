#pragma once

// Article data model, tokenization, vocabulary and JSON Lines corpus I/O.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace baitwatch {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnkToken = "<unk>";

enum class InsertionMode { insert, replace };

std::string_view to_string(InsertionMode mode);
InsertionMode insertion_mode_from_string(std::string_view name);

// Where the implanted paragraphs of a generated incongruent article came from.
struct Provenance {
  std::string donor_id;
  std::size_t donor_start = 0;  // first copied paragraph in the donor
  std::size_t count = 0;        // number of contiguous donor paragraphs
  std::size_t position = 0;     // index of the first implanted paragraph in the result
  InsertionMode mode = InsertionMode::insert;

  bool operator==(const Provenance&) const = default;
};

struct Article {
  std::string id;
  std::string category;
  TokenSeq headline;
  std::vector<TokenSeq> paragraphs;
  std::optional<int> label;  // 1 = incongruent, 0 = congruent
  std::optional<Provenance> provenance;

  std::size_t body_length() const;
  TokenSeq flattened_body() const;

  bool operator==(const Article&) const = default;
};

// A headline paired with the body units a model reads: paragraphs for whole
// articles, or the sentences of a single paragraph for independent-paragraph
// instances.
struct Document {
  TokenSeq headline;
  std::vector<TokenSeq> units;
};

// Throws std::invalid_argument describing the first violated invariant.
void validate(const Article& article);

// Lowercases, splits on whitespace, then peels leading and trailing ASCII
// punctuation off each chunk as single-character tokens.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  // Reserved ids only.
  Vocabulary();

  // tokens[i] receives id i + 2.
  static Vocabulary from_tokens(std::span<const std::string> tokens);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;  // kUnkId when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Streaming frequency tally feeding build_vocabulary.
class VocabularyBuilder {
 public:
  void add_text(std::string_view text);
  void add_tokens(std::span<const std::string> tokens);
  Vocabulary build(std::size_t min_count) const;

 private:
  std::unordered_map<std::string, std::size_t> counts_;
};

Vocabulary build_vocabulary(std::span<const std::string> texts, std::size_t min_count);

TokenSeq encode(const Vocabulary& vocab, std::span<const std::string> tokens);
std::vector<std::string> decode(const Vocabulary& vocab, std::span<const TokenId> ids);

// Splits after sentence-final punctuation tokens ("." "!" "?").
class SentenceSplitter {
 public:
  SentenceSplitter() = default;
  explicit SentenceSplitter(const Vocabulary& vocab);
  explicit SentenceSplitter(std::unordered_set<TokenId> delimiters)
      : delimiters_(std::move(delimiters)) {}

  std::vector<TokenSeq> operator()(std::span<const TokenId> paragraph) const;

 private:
  std::unordered_set<TokenId> delimiters_;
};

std::vector<TokenSeq> split_sentences(std::span<const TokenId> paragraph, const Vocabulary& vocab);

struct MeanStdErr {
  double mean = 0.0;
  double std_error = 0.0;
};

struct CorpusStats {
  std::size_t articles = 0;
  MeanStdErr headline_tokens;
  MeanStdErr body_tokens;
  MeanStdErr paragraphs_per_body;
  MeanStdErr tokens_per_paragraph;
};

// Single-pass (Welford) accumulator behind corpus_stats.
class CorpusStatsAccumulator {
 public:
  void add(const Article& article);
  CorpusStats result() const;  // throws std::invalid_argument("empty corpus")

 private:
  struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void push(double x);
    MeanStdErr summary() const;
  };

  std::size_t articles_ = 0;
  Moments headline_, body_, paragraphs_, paragraph_tokens_;
};

CorpusStats corpus_stats(std::span<const Article> corpus);

class CorpusFormatError : public std::runtime_error {
 public:
  CorpusFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Canonical single-line JSON form (no trailing newline).
std::string to_json_line(const Article& article);
// Throws std::invalid_argument on schema violations.
Article article_from_json_line(std::string_view line);

// Streams articles from a JSON Lines file; line numbers are 1-based.
class CorpusReader {
 public:
  explicit CorpusReader(const std::string& path);
  std::optional<Article> next();
  std::size_t line() const { return line_; }

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t line_ = 0;
};

class CorpusWriter {
 public:
  explicit CorpusWriter(const std::string& path);
  void write(const Article& article);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
};

std::vector<Article> read_corpus(const std::string& path);
void write_corpus(const std::string& path, std::span<const Article> articles);

}  // namespace baitwatch
