#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "baitwatch/datagen.hpp"
#include "baitwatch/features.hpp"
#include "helpers.hpp"

using namespace baitwatch;

namespace {

constexpr std::size_t kTf = 0, kTfidf = 1, kUni = 2, kBi = 3, kHeadLen = 4, kBodyLen = 5, kParas = 6, kMissing = 7;

}  // namespace

TEST_CASE("feature examples") {
  const IdfTable idf;
  const TokenId a = 2, b = 3, c = 4, d = 5;

  const auto same = extract_features(TokenSeq{a, b, c}, std::vector<TokenSeq>{{a, b, c}}, idf);
  CHECK(same[kTf] == doctest::Approx(1.0));
  CHECK(same[kTfidf] == doctest::Approx(1.0));
  CHECK(same[kUni] == 1.0);
  CHECK(same[kBi] == doctest::Approx(2.0 / 3.0));
  CHECK(same[kMissing] == 0.0);

  const auto disjoint = extract_features(TokenSeq{a, b}, std::vector<TokenSeq>{{c, d, d}}, idf);
  CHECK(disjoint[kTf] == 0.0);
  CHECK(disjoint[kTfidf] == 0.0);
  CHECK(disjoint[kMissing] == 2.0);
  CHECK(disjoint[kHeadLen] == 2.0);
  CHECK(disjoint[kBodyLen] == 3.0);
  CHECK(disjoint[kParas] == 1.0);

  // {a,b} . {a,c} = 1, both norms sqrt(2)
  const auto half = extract_features(TokenSeq{a, b}, std::vector<TokenSeq>{{a, c}}, idf);
  CHECK(half[kTf] == doctest::Approx(0.5));
  CHECK(half[kUni] == 0.5);

  CHECK_THROWS(extract_features(TokenSeq{}, std::vector<TokenSeq>{{a}}, idf));
  CHECK_THROWS(extract_features(TokenSeq{a}, std::vector<TokenSeq>{}, idf));
  CHECK_THROWS(extract_features(TokenSeq{a}, std::vector<TokenSeq>{{}}, idf));
}

TEST_CASE("bigrams stay inside paragraphs") {
  const IdfTable idf;
  const auto split = extract_features(TokenSeq{2, 3}, std::vector<TokenSeq>{{9, 2}, {3, 9}}, idf);
  CHECK(split[kBi] == 0.0);
  const auto joined = extract_features(TokenSeq{2, 3}, std::vector<TokenSeq>{{9, 2, 3, 9}}, idf);
  CHECK(joined[kBi] == 0.5);
}

TEST_CASE("tf-idf cosine against a hand computation") {
  std::vector<Article> docs{testing::make_article("1", "c", {2}, {{3, 3}}),
                            testing::make_article("2", "c", {2}, {{4}}),
                            testing::make_article("3", "c", {5}, {{4}})};
  const auto idf = IdfTable::fit(docs);
  CHECK(idf.documents() == 3);
  auto ln = [](double x) { return std::log(x); };
  const double i2 = ln(4.0 / 3.0) + 1, i3 = ln(4.0 / 2.0) + 1, i4 = ln(4.0 / 3.0) + 1, i9 = ln(4.0) + 1;
  CHECK(idf.idf(2) == doctest::Approx(i2));
  CHECK(idf.idf(3) == doctest::Approx(i3));
  CHECK(idf.idf(9) == doctest::Approx(i9));

  // headline {2:1, 3:1}, body {2:1, 4:2}
  const auto f = extract_features(TokenSeq{2, 3}, std::vector<TokenSeq>{{2, 4, 4}}, idf);
  const double dot = i2 * i2;
  const double nh = std::sqrt(i2 * i2 + i3 * i3);
  const double nb = std::sqrt(i2 * i2 + 4 * i4 * i4);
  CHECK(f[kTfidf] == doctest::Approx(dot / (nh * nb)).epsilon(1e-12));
  CHECK(f[kTf] == doctest::Approx(1.0 / (std::sqrt(2.0) * std::sqrt(5.0))).epsilon(1e-12));

  const auto back = IdfTable::from_json(nlohmann::json::parse(idf.to_json().dump()));
  CHECK(back.idf(3) == idf.idf(3));
  CHECK(back.documents() == 3);
}

TEST_CASE("feature invariances") {
  const auto corpus = make_synthetic_corpus(40, 2, 30, 3).articles;
  const auto idf = IdfTable::fit(corpus);
  std::mt19937 gen(1);
  for (const auto& a : corpus) {
    const auto f = extract_features(a.headline, a.paragraphs, idf);
    for (double x : f) CHECK(std::isfinite(x));
    CHECK(f[kTf] >= 0.0);
    CHECK(f[kTf] <= 1.0);
    CHECK(f[kTfidf] >= 0.0);
    CHECK(f[kTfidf] <= 1.0);

    auto shuffled = a.paragraphs;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const auto g = extract_features(a.headline, shuffled, idf);
    for (auto k : {kTf, kTfidf, kUni, kHeadLen, kBodyLen, kParas, kMissing}) CHECK(g[k] == doctest::Approx(f[k]));

    auto doubled = a.paragraphs;
    doubled.insert(doubled.end(), a.paragraphs.begin(), a.paragraphs.end());
    const auto h = extract_features(a.headline, doubled, idf);
    CHECK(h[kTf] == doctest::Approx(f[kTf]).epsilon(1e-12));
    CHECK(h[kTfidf] == doctest::Approx(f[kTfidf]).epsilon(1e-12));
  }
}

TEST_CASE("logistic regression") {
  // separable toy set
  std::vector<std::vector<double>> x{{0, 0}, {0, 1}, {1, 0}, {3, 3}, {3, 4}, {4, 3}};
  std::vector<int> y{0, 0, 0, 1, 1, 1};
  const auto m = train_linear(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK((m.predict(x[i]) >= 0.5) == (y[i] == 1));

  // zero features: only the bias moves, and it starts at the prior
  std::vector<std::vector<double>> zero(10, std::vector<double>(3, 0.0));
  std::vector<int> y3{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  const auto prior = train_linear(zero, y3);
  for (double w : prior.weights) CHECK(w == 0.0);
  CHECK(prior.predict(zero[0]) == doctest::Approx(0.3));

  CHECK_THROWS(train_linear(zero, std::vector<int>(10, 1)));
  CHECK_THROWS(train_linear(std::vector<std::vector<double>>{}, std::vector<int>{}));
  CHECK_THROWS(train_linear(zero, std::vector<int>{1, 0}));
}

TEST_CASE("logistic regression loss decreases") {
  std::mt19937 gen(500);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 500; ++i) {
    const int label = i % 2;
    x.push_back({noise(gen) + 1.5 * label, 10.0 * noise(gen) - 5.0 * label, noise(gen)});
    y.push_back(label);
  }
  LinearConfig cfg;
  cfg.epochs = 10;
  const auto m = train_linear(x, y, cfg);
  REQUIRE(m.loss_history.size() == 10);
  for (std::size_t e = 1; e < 10; ++e) CHECK(m.loss_history[e] < m.loss_history[e - 1]);
  CHECK(train_linear(x, y, cfg).weights == m.weights);

  const auto back = LinearModel::from_json(nlohmann::json::parse(m.to_json().dump()));
  CHECK(back.logit(x[7]) == doctest::Approx(m.logit(x[7])).epsilon(1e-15));
  CHECK_THROWS(m.logit(std::vector<double>{1.0}));
}

TEST_CASE("feature baseline with and without IP") {
  const auto corpus = make_synthetic_corpus(300, 3, 40, 5).articles;
  GenConfig cfg;
  cfg.seed = 5;
  const auto ds = build_dataset(corpus, cfg);
  for (bool ip : {false, true}) {
    CAPTURE(ip);
    const auto base = train_feature_baseline(ds.train, ip);
    for (const auto& a : ds.test) {
      const double s = base.score(a);
      CHECK(s > 0.0);
      CHECK(s < 1.0);
      if (ip) {
        const auto ps = base.paragraph_scores(a);
        CHECK(s == *std::max_element(ps.begin(), ps.end()));
      }
    }
    const auto back = FeatureBaseline::from_json(nlohmann::json::parse(base.to_json().dump()));
    CHECK(back.ip == ip);
    CHECK(back.score(ds.test[0]) == doctest::Approx(base.score(ds.test[0])).epsilon(1e-12));
  }
  auto unlabeled = ds.train;
  unlabeled[0].label.reset();
  CHECK_THROWS(train_feature_baseline(unlabeled, false));
  CHECK_THROWS(FeatureBaseline::from_json(nlohmann::json{{"kind", "svm"}}));
}

TEST_CASE("feature csv") {
  auto a = testing::make_article("x\"1", "c", {2, 3}, {{2, 4}});
  a.label = 1;
  const auto b = testing::make_article("y", "c", {5}, {{6}});
  std::ostringstream out;
  write_feature_csv(out, std::vector<Article>{a, b}, IdfTable{});
  std::istringstream in(out.str());
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header ==
        "id,label,tf_cosine,tfidf_cosine,unigram_overlap,bigram_overlap,headline_length,body_length,paragraph_count,"
        "missing_headline_tokens");
  CHECK(row1.rfind("\"x\"\"1\",1,", 0) == 0);
  CHECK(row2.rfind("\"y\",,0,0,0,0,1,1,1,1", 0) == 0);
}
