#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "baitwatch/datagen.hpp"
#include "baitwatch/textcorpus.hpp"
#include "helpers.hpp"

using namespace baitwatch;
using Strings = std::vector<std::string>;

TEST_CASE("tokenize splits whitespace, lowercases and peels punctuation") {
  CHECK(tokenize("Yoga is good") == Strings{"yoga", "is", "good"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("yoga, now!") == Strings{"yoga", ",", "now", "!"});
  CHECK(tokenize("  \t\n ").empty());
  CHECK(tokenize("\"Quoted.\"") == Strings{"\"", "quoted", ".", "\""});
  CHECK(tokenize("e.g. U.S.") == Strings{"e.g", ".", "u.s", "."});
  CHECK(tokenize("...") == Strings{".", ".", "."});
}

TEST_CASE("tokenize is stable under re-joining its output") {
  std::mt19937 gen(11);
  const std::string alphabet = "abcXYZ019 .,!?;:'\"()-\t\n";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 40);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    for (int k = len(gen); k > 0; --k) text.push_back(alphabet[pick(gen)]);
    const auto once = tokenize(text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(tokenize(joined) == once);
  }
}

TEST_CASE("vocabulary assigns ids by descending frequency from 2") {
  const Strings one{"a a b"};
  const auto v = build_vocabulary(one, 1);
  CHECK(v.size() == 4);
  CHECK(v.id("<pad>") == 0);
  CHECK(v.id("<unk>") == 1);
  CHECK(v.id("a") == 2);
  CHECK(v.id("b") == 3);

  const Strings two{"a b"};
  CHECK(build_vocabulary(two, 2).size() == 2);
  CHECK(build_vocabulary(Strings{}, 1).size() == 2);
  CHECK_THROWS_AS(build_vocabulary(one, 0), std::invalid_argument);

  // ties are lexicographic
  const auto tie = build_vocabulary(Strings{"b a c"}, 1);
  CHECK(tie.token(2) == "a");
  CHECK(tie.token(3) == "b");
  CHECK(tie.token(4) == "c");
}

TEST_CASE("vocabulary order matches an independent frequency tally") {
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> word(0, 299);
  std::uniform_int_distribution<int> len(1, 30);
  Strings docs;
  std::map<std::string, int> tally;
  for (int d = 0; d < 1000; ++d) {
    std::string doc;
    for (int k = len(gen); k > 0; --k) {
      // skewed so frequencies differ
      const auto w = "w" + std::to_string(word(gen) % (1 + word(gen)));
      doc += w + " ";
      ++tally[w];
    }
    docs.push_back(doc);
  }
  std::vector<std::pair<std::string, int>> expected(tally.begin(), tally.end());
  std::stable_sort(expected.begin(), expected.end(), [](auto& a, auto& b) { return a.second > b.second; });

  const auto v = build_vocabulary(docs, 1);
  REQUIRE(v.size() == expected.size() + 2);
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(v.token(static_cast<TokenId>(i + 2)) == expected[i].first);
  CHECK(build_vocabulary(docs, 1) == v);

  const auto v3 = build_vocabulary(docs, 3);
  std::size_t kept = 0;
  for (auto& [w, n] : tally) kept += n >= 3;
  CHECK(v3.size() == kept + 2);
}

TEST_CASE("encode maps unknowns to 1 and round-trips known ids") {
  const auto v = Vocabulary::from_tokens(Strings{"a"});
  CHECK(encode(v, Strings{"a", "zzz"}) == TokenSeq{2, 1});
  CHECK(encode(v, Strings{}).empty());

  const auto big = build_vocabulary(Strings{"the cat sat on the mat , the end ."}, 1);
  TokenSeq ids;
  for (TokenId i = 2; i < big.size(); ++i) ids.push_back(i);
  const auto words = decode(big, ids);
  for (const auto& w : words) CHECK(w != "<unk>");
  CHECK(encode(big, words) == ids);
  for (auto id : encode(big, tokenize("the dog sat on a log"))) CHECK(id < big.size());
}

TEST_CASE("vocabulary file round-trip and validation") {
  testing::TempDir dir("vocab");
  const auto v = build_vocabulary(Strings{"x y y z z z"}, 1);
  v.save(dir.file("v.tsv"));
  CHECK(Vocabulary::load(dir.file("v.tsv")) == v);
  {
    std::ifstream in(dir.file("v.tsv"));
    std::string first;
    std::getline(in, first);
    CHECK(first == "<pad>\t0");
  }
  std::ofstream(dir.file("gap.tsv")) << "<pad>\t0\n<unk>\t1\na\t3\n";
  CHECK_THROWS_AS(Vocabulary::load(dir.file("gap.tsv")), CorpusFormatError);
  std::ofstream(dir.file("dup.tsv")) << "<pad>\t0\n<unk>\t1\na\t2\na\t3\n";
  CHECK_THROWS(Vocabulary::load(dir.file("dup.tsv")));
}

TEST_CASE("sentence splitting") {
  const auto v = Vocabulary::from_tokens(Strings{"a", "b", ".", "!", "?"});
  const auto a = v.id("a");
  const auto b = v.id("b");
  const auto dot = v.id(".");
  CHECK(split_sentences(TokenSeq{a, dot, b}, v) == std::vector<TokenSeq>{{a, dot}, {b}});
  CHECK(split_sentences(TokenSeq{a, b}, v) == std::vector<TokenSeq>{{a, b}});
  CHECK(split_sentences(TokenSeq{a, dot, dot, b}, v) == std::vector<TokenSeq>{{a, dot}, {dot}, {b}});
  CHECK(split_sentences(TokenSeq{a, v.id("!"), b, v.id("?")}, v) ==
        std::vector<TokenSeq>{{a, v.id("!")}, {b, v.id("?")}});
  CHECK(split_sentences(TokenSeq{}, v).empty());
  // no delimiters in the vocabulary: one sentence
  const auto plain = Vocabulary::from_tokens(Strings{"a"});
  CHECK(split_sentences(TokenSeq{2, 2}, plain) == std::vector<TokenSeq>{{2, 2}});
}

TEST_CASE("corpus statistics") {
  std::vector<Article> one{testing::make_article("x", "c", {2, 3, 4}, {{2, 2, 2, 2, 2}})};
  const auto s = corpus_stats(one);
  CHECK(s.headline_tokens.mean == 3.0);
  CHECK(s.body_tokens.mean == 5.0);
  CHECK(s.paragraphs_per_body.mean == 1.0);
  CHECK(s.tokens_per_paragraph.mean == 5.0);
  CHECK(s.headline_tokens.std_error == 0.0);
  CHECK(s.tokens_per_paragraph.std_error == 0.0);
  CHECK_THROWS_WITH_AS(corpus_stats(std::vector<Article>{}), "empty corpus", std::invalid_argument);
}

TEST_CASE("corpus statistics match a two-pass recomputation") {
  const auto corpus = make_synthetic_corpus(100, 3, 50, 9).articles;
  auto two_pass = [](const std::vector<double>& xs) {
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return std::pair{mean, sd / std::sqrt(static_cast<double>(xs.size()))};
  };
  std::vector<double> h, b, p, t;
  for (const auto& a : corpus) {
    h.push_back(static_cast<double>(a.headline.size()));
    b.push_back(static_cast<double>(a.body_length()));
    p.push_back(static_cast<double>(a.paragraphs.size()));
    for (const auto& para : a.paragraphs) t.push_back(static_cast<double>(para.size()));
  }
  const auto s = corpus_stats(corpus);
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y)); };
  for (auto [got, xs] : {std::pair{s.headline_tokens, h}, std::pair{s.body_tokens, b},
                         std::pair{s.paragraphs_per_body, p}, std::pair{s.tokens_per_paragraph, t}}) {
    const auto [mean, se] = two_pass(xs);
    CHECK(close(got.mean, mean));
    CHECK(close(got.std_error, se));
  }
}

TEST_CASE("corpus JSONL round-trip") {
  testing::TempDir dir("corpus");
  std::vector<Article> articles{testing::make_article("a1", "sports", {2, 3}, {{4, 5}, {6}}),
                                testing::make_article("a2", "politics", {7}, {{8, 9, 10}}),
                                testing::make_article("a3", "sports", {2}, {{3}})};
  articles[1].label = 1;
  articles[1].provenance = Provenance{"a3", 0, 1, 1, InsertionMode::replace};
  articles[2].label = 0;
  write_corpus(dir.file("c.jsonl"), articles);
  CHECK(read_corpus(dir.file("c.jsonl")) == articles);

  // canonical lines survive a second write byte for byte
  std::ifstream in(dir.file("c.jsonl"));
  std::string first((std::istreambuf_iterator<char>(in)), {});
  write_corpus(dir.file("d.jsonl"), read_corpus(dir.file("c.jsonl")));
  std::ifstream in2(dir.file("d.jsonl"));
  std::string second((std::istreambuf_iterator<char>(in2)), {});
  CHECK(first == second);
}

TEST_CASE("malformed corpus lines report their line number") {
  testing::TempDir dir("bad");
  std::ofstream(dir.file("c.jsonl")) << to_json_line(testing::make_article("a", "c", {2}, {{3}})) << "\n"
                                     << R"({"id":"b","category":"c","paragraphs":[[3]]})" << "\n";
  CorpusReader reader(dir.file("c.jsonl"));
  CHECK(reader.next().has_value());
  try {
    reader.next();
    FAIL("expected an error");
  } catch (const CorpusFormatError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("headline") != std::string::npos);
  }
  CHECK_THROWS_AS(article_from_json_line(R"({"id":"b","category":"c","headline":[],"paragraphs":[[3]]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(article_from_json_line(R"({"id":"b","category":"c","headline":[2],"paragraphs":[[]]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(article_from_json_line(R"({"id":"b","category":"c","headline":[2],"paragraphs":[[3]],"label":2})"),
                  std::invalid_argument);
}

TEST_CASE("large corpus streams in file order") {
  testing::TempDir dir("big");
  const auto corpus = make_synthetic_corpus(10000, 2, 20, 3).articles;
  write_corpus(dir.file("c.jsonl"), corpus);
  CorpusReader reader(dir.file("c.jsonl"));
  std::size_t i = 0;
  while (auto a = reader.next()) {
    REQUIRE(i < corpus.size());
    CHECK(a->id == corpus[i].id);
    ++i;
  }
  CHECK(i == corpus.size());
}
