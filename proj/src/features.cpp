#include "baitwatch/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include "baitwatch/autodiff.hpp"

namespace baitwatch {

namespace {

using Counts = std::unordered_map<TokenId, double>;

std::uint64_t bigram_key(TokenId a, TokenId b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

double cosine(const Counts& a, const Counts& b, const IdfTable* idf) {
  auto weight = [&](TokenId t, double c) { return idf ? c * idf->idf(t) : c; };
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [t, c] : a) {
    const double wa = weight(t, c);
    na += wa * wa;
    if (auto it = b.find(t); it != b.end()) dot += wa * weight(t, it->second);
  }
  for (const auto& [t, c] : b) {
    const double wb = weight(t, c);
    nb += wb * wb;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

}  // namespace

IdfTable IdfTable::fit(std::span<const Article> articles) {
  IdfTable t;
  t.documents_ = articles.size();
  std::set<TokenId> seen;
  for (const auto& a : articles) {
    seen.clear();
    seen.insert(a.headline.begin(), a.headline.end());
    for (const auto& p : a.paragraphs) seen.insert(p.begin(), p.end());
    for (auto id : seen) ++t.df_[id];
  }
  return t;
}

double IdfTable::idf(TokenId token) const {
  auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(documents_)) / (1.0 + df)) + 1.0;
}

nlohmann::ordered_json IdfTable::to_json() const {
  std::map<TokenId, std::size_t> sorted(df_.begin(), df_.end());
  nlohmann::ordered_json df = nlohmann::ordered_json::array();
  for (const auto& [t, n] : sorted) df.push_back({t, n});
  return {{"documents", documents_}, {"df", df}};
}

IdfTable IdfTable::from_json(const nlohmann::json& j) {
  IdfTable t;
  t.documents_ = j.at("documents").get<std::size_t>();
  for (const auto& pair : j.at("df")) t.df_[pair.at(0).get<TokenId>()] = pair.at(1).get<std::size_t>();
  return t;
}

FeatureVector extract_features(std::span<const TokenId> headline, std::span<const TokenSeq> body,
                               const IdfTable& idf) {
  if (headline.empty()) throw std::invalid_argument("empty headline");
  std::size_t body_tokens = 0;
  for (const auto& p : body) body_tokens += p.size();
  if (body_tokens == 0) throw std::invalid_argument("empty body");

  Counts h;
  Counts b;
  for (auto t : headline) h[t] += 1.0;
  std::unordered_map<std::uint64_t, int> body_bigrams;
  for (const auto& p : body) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      b[p[i]] += 1.0;
      if (i + 1 < p.size()) body_bigrams[bigram_key(p[i], p[i + 1])] = 1;
    }
  }

  std::size_t shared = 0;
  for (auto t : headline) shared += b.contains(t);
  std::size_t shared_bigrams = 0;
  for (std::size_t i = 0; i + 1 < headline.size(); ++i) {
    shared_bigrams += body_bigrams.contains(bigram_key(headline[i], headline[i + 1]));
  }
  const double len = static_cast<double>(headline.size());

  return {cosine(h, b, nullptr),
          cosine(h, b, &idf),
          static_cast<double>(shared) / len,
          static_cast<double>(shared_bigrams) / len,
          len,
          static_cast<double>(body_tokens),
          static_cast<double>(body.size()),
          static_cast<double>(headline.size() - shared)};
}

// ---------------------------------------------------------------------------

double LinearModel::logit(std::span<const double> x) const {
  if (x.size() != weights.size()) throw std::invalid_argument("feature width does not match the model");
  double z = bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * (x[i] - mean[i]) / scale[i];
  return z;
}

double LinearModel::predict(std::span<const double> x) const { return ad::stable_sigmoid(logit(x)); }

nlohmann::ordered_json LinearModel::to_json() const {
  return {{"weights", weights}, {"bias", bias}, {"mean", mean}, {"scale", scale}};
}

LinearModel LinearModel::from_json(const nlohmann::json& j) {
  LinearModel m;
  j.at("weights").get_to(m.weights);
  m.bias = j.at("bias").get<double>();
  j.at("mean").get_to(m.mean);
  j.at("scale").get_to(m.scale);
  if (m.mean.size() != m.weights.size() || m.scale.size() != m.weights.size()) {
    throw std::invalid_argument("linear model vectors differ in length");
  }
  return m;
}

LinearModel train_linear(std::span<const std::vector<double>> features, std::span<const int> labels,
                         const LinearConfig& config) {
  if (features.size() != labels.size()) throw std::invalid_argument("features and labels differ in length");
  const auto n = features.size();
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (n == 0 || positives == 0 || positives == n) {
    throw std::invalid_argument("train_linear needs examples of both classes");
  }
  const auto d = features[0].size();
  for (const auto& f : features) {
    if (f.size() != d) throw std::invalid_argument("ragged feature matrix");
  }

  LinearModel m;
  m.weights.assign(d, 0.0);
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 0.0);
  for (const auto& f : features) {
    for (std::size_t k = 0; k < d; ++k) m.mean[k] += f[k];
  }
  for (auto& v : m.mean) v /= static_cast<double>(n);
  for (const auto& f : features) {
    for (std::size_t k = 0; k < d; ++k) m.scale[k] += (f[k] - m.mean[k]) * (f[k] - m.mean[k]);
  }
  for (auto& v : m.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1.0;  // constant column
  }
  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  m.bias = std::log(prior / (1.0 - prior));

  std::vector<std::vector<double>> x(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) x[i][k] = (features[i][k] - m.mean[k]) / m.scale[k];
  }

  std::vector<double> grad(d);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = m.bias;
      for (std::size_t k = 0; k < d; ++k) z += m.weights[k] * x[i][k];
      const double y = labels[i];
      // softplus(z) - y z, written stably
      loss += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y * z;
      const double r = ad::stable_sigmoid(z) - y;
      for (std::size_t k = 0; k < d; ++k) grad[k] += r * x[i][k];
      grad_b += r;
    }
    m.loss_history.push_back(loss / static_cast<double>(n));
    const double step = config.learning_rate / static_cast<double>(n);
    for (std::size_t k = 0; k < d; ++k) m.weights[k] -= step * grad[k];
    m.bias -= step * grad_b;
  }
  return m;
}

// ---------------------------------------------------------------------------

std::vector<double> FeatureBaseline::paragraph_scores(const Article& article) const {
  std::vector<double> out;
  out.reserve(article.paragraphs.size());
  for (std::size_t p = 0; p < article.paragraphs.size(); ++p) {
    const auto f = extract_features(article.headline, std::span(article.paragraphs).subspan(p, 1), idf);
    out.push_back(model.predict(f));
  }
  return out;
}

double FeatureBaseline::score(const Article& article) const {
  if (!ip) return model.predict(extract_features(article.headline, article.paragraphs, idf));
  const auto s = paragraph_scores(article);
  if (s.empty()) throw std::invalid_argument("article has no paragraphs");
  return *std::max_element(s.begin(), s.end());
}

nlohmann::ordered_json FeatureBaseline::to_json() const {
  return {{"kind", "linear"}, {"ip", ip}, {"model", model.to_json()}, {"idf", idf.to_json()}};
}

FeatureBaseline FeatureBaseline::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "linear") throw std::invalid_argument("not a linear baseline model");
  FeatureBaseline b;
  b.ip = j.at("ip").get<bool>();
  b.model = LinearModel::from_json(j.at("model"));
  b.idf = IdfTable::from_json(j.at("idf"));
  if (b.model.weights.size() != kFeatureCount) throw std::invalid_argument("linear baseline must have 8 weights");
  return b;
}

FeatureBaseline train_feature_baseline(std::span<const Article> train, bool ip, const LinearConfig& config) {
  FeatureBaseline b;
  b.ip = ip;
  b.idf = IdfTable::fit(train);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& a : train) {
    if (!a.label) throw std::invalid_argument("training article '" + a.id + "' has no label");
    if (ip) {
      for (std::size_t p = 0; p < a.paragraphs.size(); ++p) {
        const auto f = extract_features(a.headline, std::span(a.paragraphs).subspan(p, 1), b.idf);
        x.emplace_back(f.begin(), f.end());
        y.push_back(*a.label);
      }
    } else {
      const auto f = extract_features(a.headline, a.paragraphs, b.idf);
      x.emplace_back(f.begin(), f.end());
      y.push_back(*a.label);
    }
  }
  b.model = train_linear(x, y, config);
  return b;
}

void write_feature_csv(std::ostream& out, std::span<const Article> articles, const IdfTable& idf) {
  out << "id,label";
  for (auto name : kFeatureNames) out << ',' << name;
  out << '\n';
  out.precision(17);
  for (const auto& a : articles) {
    // ids are free text; quote them
    out << '"';
    for (char c : a.id) {
      if (c == '"') out << '"';
      out << c;
    }
    out << "\",";
    if (a.label) out << *a.label;
    for (double v : extract_features(a.headline, a.paragraphs, idf)) out << ',' << v;
    out << '\n';
  }
}

}  // namespace baitwatch
