#include "baitwatch/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "baitwatch/hashing.hpp"
#include "baitwatch/random.hpp"

namespace baitwatch {

using ad::Var;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::rde: return "rde";
    case ModelKind::cde: return "cde";
    case ModelKind::hrde: return "hrde";
    case ModelKind::ahde: return "ahde";
    case ModelKind::hre: return "hre";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto k : {ModelKind::rde, ModelKind::cde, ModelKind::hrde, ModelKind::ahde, ModelKind::hre}) {
    if (to_string(k) == lower) return k;
  }
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "' (expected rde, cde, hrde, ahde or hre)");
}

bool is_hierarchical(ModelKind kind) {
  return kind == ModelKind::hrde || kind == ModelKind::ahde || kind == ModelKind::hre;
}

// ---------------------------------------------------------------------------
// Building blocks

namespace {

template <typename T>
Var<T> zeros(ad::Graph<T>& g, std::size_t n) {
  return g.constant(ad::Tensor<T>({n}));
}

template <typename T>
std::size_t hidden_size(const GruParams<T>& p) {
  return p.u_z->value.rows();
}

}  // namespace

template <typename T>
Var<T> gru_step(ad::Graph<T>& g, const GruParams<T>& p, Var<T> h_prev, Var<T> x) {
  const auto d_h = hidden_size(p);
  if (h_prev.size() != d_h || x.size() != p.w_z->value.cols()) {
    throw ad::ShapeError("gru_step: hidden " + ad::shape_string(h_prev.shape()) + " / input " +
                         ad::shape_string(x.shape()) + " do not match cell " + std::to_string(p.w_z->value.cols()) +
                         "->" + std::to_string(d_h));
  }
  auto W = [&](const ad::Parameter<T>* q) { return g.param(*q); };
  auto z = ad::sigmoid(matmul(W(p.w_z), x) + matmul(W(p.u_z), h_prev) + W(p.b_z));
  auto r = ad::sigmoid(matmul(W(p.w_r), x) + matmul(W(p.u_r), h_prev) + W(p.b_r));
  auto c = ad::tanh(matmul(W(p.w_h), x) + matmul(W(p.u_h), r * h_prev) + W(p.b_h));
  return h_prev + z * (c - h_prev);
}

template <typename T>
EncodedSequence<T> run_gru(ad::Graph<T>& g, const GruParams<T>& gru, std::span<const Var<T>> inputs) {
  if (inputs.empty()) throw std::invalid_argument("empty sequence");
  EncodedSequence<T> out;
  out.states.reserve(inputs.size());
  Var<T> h = zeros(g, hidden_size(gru));
  for (const auto& x : inputs) {
    h = gru_step(g, gru, h, x);
    out.states.push_back(h);
  }
  out.final = h;
  return out;
}

template <typename T>
EncodedSequence<T> encode_tokens(ad::Graph<T>& g, const GruParams<T>& gru, const ad::Parameter<T>& embeddings,
                                 std::span<const TokenId> tokens) {
  std::vector<Var<T>> embedded;
  embedded.reserve(tokens.size());
  for (auto id : tokens) {
    if (id != kPadId) embedded.push_back(g.embedding(embeddings, id));
  }
  return run_gru<T>(g, gru, embedded);
}

template <typename T>
Var<T> conv_encode(ad::Graph<T>& g, const ConvParams<T>& p, std::span<const Var<T>> embedded) {
  if (embedded.empty()) throw std::invalid_argument("empty sequence");
  const auto widest = *std::max_element(p.widths.begin(), p.widths.end());
  std::vector<Var<T>> seq(embedded.begin(), embedded.end());
  if (seq.size() < widest) {
    const auto pad = zeros(g, seq.front().size());
    seq.resize(widest, pad);
  }

  std::vector<Var<T>> pooled;
  pooled.reserve(p.widths.size());
  std::vector<Var<T>> responses;
  for (std::size_t k = 0; k < p.widths.size(); ++k) {
    const auto w = p.widths[k];
    const auto filter = g.param(*p.filters[k]);
    const auto bias = g.param(*p.biases[k]);
    responses.clear();
    for (std::size_t t = 0; t + w <= seq.size(); ++t) {
      const auto window = ad::concat<T>(std::span<const Var<T>>(seq).subspan(t, w));
      responses.push_back(matmul(filter, window) + bias);
    }
    pooled.push_back(ad::max_rows(ad::stack<T>(responses)));
  }
  return ad::concat<T>(pooled);
}

template <typename T>
AttentionResult<T> attention_pool(ad::Graph<T>& g, const AttentionParams<T>& p, std::span<const Var<T>> states,
                                  Var<T> headline) {
  if (states.empty()) throw std::invalid_argument("attention_pool: empty sequence");
  const auto query = matmul(g.param(*p.w_headline), headline);
  const auto w_body = g.param(*p.w_body);
  const auto v = g.param(*p.v);
  std::vector<Var<T>> scores;
  scores.reserve(states.size());
  for (const auto& u : states) scores.push_back(ad::dot(v, ad::tanh(matmul(w_body, u) + query)));
  const auto weights = ad::softmax(ad::concat<T>(scores));
  Var<T> context = ad::slice(weights, 0, 1) * states[0];
  for (std::size_t i = 1; i < states.size(); ++i) context = context + ad::slice(weights, i, 1) * states[i];
  return {weights, context};
}

template <typename T>
Var<T> bilinear_logit(ad::Graph<T>& g, const BilinearScorer<T>& s, Var<T> headline, Var<T> body) {
  const auto& m = s.m->value;
  if (headline.size() != m.rows() || body.size() != m.cols()) {
    throw ad::ShapeError("bilinear: headline " + ad::shape_string(headline.shape()) + " and body " +
                         ad::shape_string(body.shape()) + " do not match M " + ad::shape_string(m.shape));
  }
  return ad::dot(headline, matmul(g.param(*s.m), body)) + g.param(*s.b);
}

// ---------------------------------------------------------------------------
// Parameter layout

namespace {

void add_gru(std::map<std::string, ad::Shape>& out, const std::string& prefix, std::size_t in, std::size_t hid) {
  for (const char* gate : {"z", "r", "h"}) {
    out[prefix + ".W_" + gate] = {hid, in};
    out[prefix + ".U_" + gate] = {hid, hid};
    out[prefix + ".b_" + gate] = {hid};
  }
}

void add_conv(std::map<std::string, ad::Shape>& out, const std::string& prefix, std::size_t emb, std::size_t filters) {
  for (auto w : kConvWidths) {
    out[prefix + ".w" + std::to_string(w)] = {filters, w * emb};
    out[prefix + ".b" + std::to_string(w)] = {filters};
  }
}

ModelDims canonical_dims(ModelKind kind, ModelDims d) {
  switch (kind) {
    case ModelKind::rde:
      d.paragraph_hidden = d.conv_filters = d.attention = 0;
      break;
    case ModelKind::cde:
      d.word_hidden = d.paragraph_hidden = d.attention = 0;
      break;
    case ModelKind::hrde:
      d.conv_filters = d.attention = 0;
      break;
    case ModelKind::ahde:
      d.conv_filters = 0;
      if (d.attention == 0) d.attention = 2 * d.paragraph_hidden;
      break;
    case ModelKind::hre:
      d.word_hidden = d.conv_filters = d.attention = 0;
      break;
  }
  return d;
}

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw std::invalid_argument(std::string("model dimension '") + what + "' must be positive");
}

}  // namespace

template <typename T>
std::map<std::string, ad::Shape> Model<T>::layout(ModelKind kind, const ModelDims& raw) {
  const auto d = canonical_dims(kind, raw);
  if (d.vocab_size < 2) throw std::invalid_argument("vocabulary must include the reserved ids");
  require_positive(d.embedding, "embedding");
  std::map<std::string, ad::Shape> out;
  out["embedding"] = {d.vocab_size, d.embedding};
  std::size_t head_dim = 0;
  std::size_t body_dim = 0;
  switch (kind) {
    case ModelKind::rde:
      require_positive(d.word_hidden, "word_hidden");
      add_gru(out, "headline.word_gru", d.embedding, d.word_hidden);
      add_gru(out, "body.word_gru", d.embedding, d.word_hidden);
      head_dim = body_dim = d.word_hidden;
      break;
    case ModelKind::cde:
      require_positive(d.conv_filters, "conv_filters");
      add_conv(out, "headline.conv", d.embedding, d.conv_filters);
      add_conv(out, "body.conv", d.embedding, d.conv_filters);
      head_dim = body_dim = std::size(kConvWidths) * d.conv_filters;
      break;
    case ModelKind::hrde:
      require_positive(d.word_hidden, "word_hidden");
      require_positive(d.paragraph_hidden, "paragraph_hidden");
      add_gru(out, "headline.word_gru", d.embedding, d.word_hidden);
      add_gru(out, "headline.para_gru", d.word_hidden, d.paragraph_hidden);
      add_gru(out, "body.word_gru", d.embedding, d.word_hidden);
      add_gru(out, "body.para_gru", d.word_hidden, d.paragraph_hidden);
      head_dim = body_dim = d.paragraph_hidden;
      break;
    case ModelKind::ahde:
      require_positive(d.word_hidden, "word_hidden");
      require_positive(d.paragraph_hidden, "paragraph_hidden");
      add_gru(out, "headline.word_gru", d.embedding, d.word_hidden);
      add_gru(out, "headline.para_fwd", d.word_hidden, d.paragraph_hidden);
      add_gru(out, "headline.para_bwd", d.word_hidden, d.paragraph_hidden);
      add_gru(out, "body.word_gru", d.embedding, d.word_hidden);
      add_gru(out, "body.para_fwd", d.word_hidden, d.paragraph_hidden);
      add_gru(out, "body.para_bwd", d.word_hidden, d.paragraph_hidden);
      head_dim = body_dim = 2 * d.paragraph_hidden;
      out["attention.W_body"] = {d.attention, body_dim};
      out["attention.W_headline"] = {d.attention, head_dim};
      out["attention.v"] = {d.attention};
      break;
    case ModelKind::hre:
      require_positive(d.paragraph_hidden, "paragraph_hidden");
      add_gru(out, "body.para_gru", d.embedding, d.paragraph_hidden);
      head_dim = d.embedding;
      body_dim = d.paragraph_hidden;
      break;
  }
  out["scorer.M"] = {head_dim, body_dim};
  out["scorer.b"] = {1};
  return out;
}

// ---------------------------------------------------------------------------
// Model

template <typename T>
Model<T> Model<T>::create(ModelKind kind, const ModelDims& dims, bool ip, std::uint64_t seed) {
  Model m(kind, ip, canonical_dims(kind, dims));
  Rng rng(seed);
  for (const auto& [name, shape] : layout(kind, m.dims_)) {
    ad::Parameter<T> p{ad::Tensor<T>(shape), false};
    const bool is_bias = shape.size() == 1 && name != "attention.v";
    if (name == "embedding") {
      const double a = std::sqrt(3.0 / static_cast<double>(shape[1]));
      for (auto& x : p.value.data) x = static_cast<T>(rng.uniform(-a, a));
      std::fill(p.value.data.begin(), p.value.data.begin() + static_cast<std::ptrdiff_t>(shape[1]), T(0));
      p.frozen_row0 = true;
    } else if (!is_bias) {
      const double fan_in = static_cast<double>(shape.size() == 2 ? shape[1] : shape[0]);
      const double fan_out = static_cast<double>(shape[0]);
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& x : p.value.data) x = static_cast<T>(rng.uniform(-a, a));
    }
    m.params_.emplace(name, std::move(p));
  }
  m.bind();
  return m;
}

template <typename T>
Model<T> Model<T>::from_tensors(ModelKind kind, bool ip, Tensors tensors) {
  auto rows_of = [&](const char* name) -> std::size_t {
    auto it = tensors.find(name);
    return it == tensors.end() || it->second.rank() == 0 ? 0 : it->second.shape[0];
  };
  auto emb = tensors.find("embedding");
  if (emb == tensors.end() || emb->second.rank() != 2) throw std::invalid_argument("checkpoint lacks a 2-d 'embedding' tensor");

  ModelDims d;
  d.vocab_size = emb->second.shape[0];
  d.embedding = emb->second.shape[1];
  d.word_hidden = rows_of("body.word_gru.U_z");
  d.paragraph_hidden = std::max(rows_of("body.para_gru.U_z"), rows_of("body.para_fwd.U_z"));
  d.conv_filters = rows_of("body.conv.b3");
  d.attention = rows_of("attention.v");

  const auto expected = layout(kind, d);
  for (const auto& [name, shape] : expected) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw std::invalid_argument("missing tensor '" + name + "' for " + std::string(to_string(kind)));
    }
    if (it->second.shape != shape) {
      throw std::invalid_argument("tensor '" + name + "' has shape " + ad::shape_string(it->second.shape) +
                                  ", expected " + ad::shape_string(shape));
    }
  }
  for (const auto& [name, t] : tensors) {
    if (!expected.contains(name)) {
      throw std::invalid_argument("unexpected tensor '" + name + "' for " + std::string(to_string(kind)));
    }
  }

  Model m(kind, ip, canonical_dims(kind, d));
  for (auto& [name, t] : tensors) {
    ad::Parameter<T> p{std::move(t), name == "embedding"};
    m.params_.emplace(name, std::move(p));
  }
  m.bind();
  return m;
}

template <typename T>
Model<T>::Model(const Model& other) : kind_(other.kind_), ip_(other.ip_), dims_(other.dims_), params_(other.params_) {
  bind();
}

template <typename T>
Model<T>& Model<T>::operator=(const Model& other) {
  if (this != &other) {
    kind_ = other.kind_;
    ip_ = other.ip_;
    dims_ = other.dims_;
    params_ = other.params_;
    bind();
  }
  return *this;
}

template <typename T>
Model<T>::Model(Model&& other) noexcept
    : kind_(other.kind_), ip_(other.ip_), dims_(other.dims_), params_(std::move(other.params_)) {
  bind();
}

template <typename T>
Model<T>& Model<T>::operator=(Model&& other) noexcept {
  kind_ = other.kind_;
  ip_ = other.ip_;
  dims_ = other.dims_;
  params_ = std::move(other.params_);
  bind();
  return *this;
}

template <typename T>
const ad::Parameter<T>* Model<T>::find(const std::string& name) const {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : &it->second;
}

template <typename T>
ad::Parameter<T>& Model<T>::parameter(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return it->second;
}

template <typename T>
GruParams<T> Model<T>::gru(const std::string& prefix) const {
  return {find(prefix + ".W_z"), find(prefix + ".W_r"), find(prefix + ".W_h"),
          find(prefix + ".U_z"), find(prefix + ".U_r"), find(prefix + ".U_h"),
          find(prefix + ".b_z"), find(prefix + ".b_r"), find(prefix + ".b_h")};
}

template <typename T>
ConvParams<T> Model<T>::conv(const std::string& prefix) const {
  ConvParams<T> c;
  for (auto w : kConvWidths) {
    c.filters.push_back(find(prefix + ".w" + std::to_string(w)));
    c.biases.push_back(find(prefix + ".b" + std::to_string(w)));
    c.widths.push_back(w);
  }
  return c;
}

template <typename T>
void Model<T>::bind() {
  bound_ = Bound{};
  if (params_.empty()) return;
  bound_.embedding = find("embedding");
  bound_.scorer = {find("scorer.M"), find("scorer.b")};
  switch (kind_) {
    case ModelKind::rde:
      bound_.headline_word = gru("headline.word_gru");
      bound_.body_word = gru("body.word_gru");
      break;
    case ModelKind::cde:
      bound_.headline_conv = conv("headline.conv");
      bound_.body_conv = conv("body.conv");
      break;
    case ModelKind::hrde:
      bound_.headline_word = gru("headline.word_gru");
      bound_.headline_para = gru("headline.para_gru");
      bound_.body_word = gru("body.word_gru");
      bound_.body_para = gru("body.para_gru");
      break;
    case ModelKind::ahde:
      bound_.headline_word = gru("headline.word_gru");
      bound_.headline_para = gru("headline.para_fwd");
      bound_.headline_bwd = gru("headline.para_bwd");
      bound_.body_word = gru("body.word_gru");
      bound_.body_para = gru("body.para_fwd");
      bound_.body_bwd = gru("body.para_bwd");
      bound_.attention = {find("attention.W_body"), find("attention.W_headline"), find("attention.v")};
      break;
    case ModelKind::hre:
      bound_.body_para = gru("body.para_gru");
      break;
  }
}

template <typename T>
std::vector<ad::NamedParameter<T>> Model<T>::parameters() {
  std::vector<ad::NamedParameter<T>> out;
  out.reserve(params_.size());
  for (auto& [name, p] : params_) out.push_back({name, &p});
  return out;
}

namespace {

void require_document(const Document& doc) {
  if (doc.headline.empty()) throw std::invalid_argument("empty headline");
  if (doc.units.empty()) throw std::invalid_argument("empty body");
}

}  // namespace

template <typename T>
Var<T> Model<T>::rde(ad::Graph<T>& g, const Document& doc) const {
  TokenSeq body;
  for (const auto& u : doc.units) body.insert(body.end(), u.begin(), u.end());
  const auto h = encode_tokens(g, bound_.headline_word, *bound_.embedding, doc.headline).final;
  const auto b = encode_tokens(g, bound_.body_word, *bound_.embedding, body).final;
  return bilinear_logit(g, bound_.scorer, h, b);
}

template <typename T>
Var<T> Model<T>::cde(ad::Graph<T>& g, const Document& doc) const {
  auto embed = [&](std::span<const TokenId> tokens, std::vector<Var<T>>& out) {
    for (auto id : tokens) {
      if (id != kPadId) out.push_back(g.embedding(*bound_.embedding, id));
    }
  };
  std::vector<Var<T>> head;
  std::vector<Var<T>> body;
  embed(doc.headline, head);
  for (const auto& u : doc.units) embed(u, body);
  const auto h = conv_encode<T>(g, bound_.headline_conv, head);
  const auto b = conv_encode<T>(g, bound_.body_conv, body);
  return bilinear_logit(g, bound_.scorer, h, b);
}

template <typename T>
Var<T> Model<T>::hrde(ad::Graph<T>& g, const Document& doc) const {
  const auto hw = encode_tokens(g, bound_.headline_word, *bound_.embedding, doc.headline).final;
  const auto uh = gru_step(g, bound_.headline_para, zeros(g, hidden_size(bound_.headline_para)), hw);
  std::vector<Var<T>> units;
  units.reserve(doc.units.size());
  for (const auto& u : doc.units) units.push_back(encode_tokens(g, bound_.body_word, *bound_.embedding, u).final);
  const auto ub = run_gru<T>(g, bound_.body_para, units).final;
  return bilinear_logit(g, bound_.scorer, uh, ub);
}

template <typename T>
Var<T> Model<T>::ahde(ad::Graph<T>& g, const Document& doc) const {
  const auto hw = encode_tokens(g, bound_.headline_word, *bound_.embedding, doc.headline).final;
  const auto d_p = hidden_size(bound_.headline_para);
  const std::array<Var<T>, 2> head_parts{gru_step(g, bound_.headline_para, zeros(g, d_p), hw),
                                         gru_step(g, bound_.headline_bwd, zeros(g, d_p), hw)};
  const auto uh = ad::concat<T>(head_parts);

  std::vector<Var<T>> units;
  units.reserve(doc.units.size());
  for (const auto& u : doc.units) units.push_back(encode_tokens(g, bound_.body_word, *bound_.embedding, u).final);
  const auto fwd = run_gru<T>(g, bound_.body_para, units);
  std::vector<Var<T>> reversed(units.rbegin(), units.rend());
  const auto bwd = run_gru<T>(g, bound_.body_bwd, reversed);

  std::vector<Var<T>> states;
  states.reserve(units.size());
  const auto n = units.size();
  for (std::size_t p = 0; p < n; ++p) {
    const std::array<Var<T>, 2> parts{fwd.states[p], bwd.states[n - 1 - p]};
    states.push_back(ad::concat<T>(parts));
  }
  const auto pooled = attention_pool<T>(g, bound_.attention, states, uh);
  return bilinear_logit(g, bound_.scorer, uh, pooled.context);
}

template <typename T>
Var<T> Model<T>::hre(ad::Graph<T>& g, const Document& doc) const {
  auto mean_embedding = [&](std::span<const TokenId> tokens) {
    std::vector<Var<T>> rows;
    rows.reserve(tokens.size());
    for (auto id : tokens) {
      if (id != kPadId) rows.push_back(g.embedding(*bound_.embedding, id));
    }
    if (rows.empty()) throw std::invalid_argument("empty sequence");
    return ad::mean_rows(ad::stack<T>(rows));
  };
  const auto h = mean_embedding(doc.headline);
  std::vector<Var<T>> units;
  units.reserve(doc.units.size());
  for (const auto& u : doc.units) units.push_back(mean_embedding(u));
  const auto b = run_gru<T>(g, bound_.body_para, units).final;
  return bilinear_logit(g, bound_.scorer, h, b);
}

template <typename T>
Var<T> Model<T>::logit(ad::Graph<T>& g, const Document& doc) const {
  require_document(doc);
  switch (kind_) {
    case ModelKind::rde: return rde(g, doc);
    case ModelKind::cde: return cde(g, doc);
    case ModelKind::hrde: return hrde(g, doc);
    case ModelKind::ahde: return ahde(g, doc);
    case ModelKind::hre: return hre(g, doc);
  }
  throw std::logic_error("unreachable model kind");
}

namespace {

// Keeps scores strictly inside (0, 1) even when the logit saturates.
double open_unit(double p) {
  if (p >= 1.0) return std::nextafter(1.0, 0.0);
  if (p <= 0.0) return std::numeric_limits<double>::denorm_min();
  return p;
}

}  // namespace

template <typename T>
double Model<T>::score(const Document& doc) const {
  ad::Graph<T> g;
  const double z = static_cast<double>(logit(g, doc).item());
  return open_unit(ad::stable_sigmoid(z));
}

template <typename T>
std::string Model<T>::version() const {
  std::string bytes;
  bytes.push_back(static_cast<char>(kind_));
  bytes.push_back(static_cast<char>(ip_));
  bytes.push_back(static_cast<char>(sizeof(T)));
  for (const auto& [name, p] : params_) {
    bytes += name;
    bytes.push_back('\0');
    for (auto d : p.value.shape) bytes += std::to_string(d) + ",";
    bytes.append(reinterpret_cast<const char*>(p.value.data.data()), p.value.data.size() * sizeof(T));
  }
  return sha256_hex(bytes).substr(0, 16);
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
  typename Model<U>::Tensors converted;
  for (const auto& [name, p] : params_) {
    ad::Tensor<U> t(p.value.shape);
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = static_cast<U>(p.value.data[i]);
    converted.emplace(name, std::move(t));
  }
  return Model<U>::from_tensors(kind_, ip_, std::move(converted));
}

// ---------------------------------------------------------------------------
// Article scoring

std::vector<TokenSeq> ip_units(ModelKind kind, std::span<const TokenId> paragraph, const SentenceSplitter& splitter) {
  if (is_hierarchical(kind)) return splitter(paragraph);
  return {TokenSeq(paragraph.begin(), paragraph.end())};
}

template <typename T>
ScoredPrediction ip_score(const Model<T>& model, std::span<const TokenId> headline,
                          std::span<const TokenSeq> paragraphs, const SentenceSplitter& splitter) {
  if (paragraphs.empty()) throw std::invalid_argument("ip_score: no paragraphs");
  ScoredPrediction out;
  out.paragraph_scores.reserve(paragraphs.size());
  Document doc;
  doc.headline.assign(headline.begin(), headline.end());
  for (const auto& p : paragraphs) {
    doc.units = ip_units(model.kind(), p, splitter);
    out.paragraph_scores.push_back(model.score(doc));
  }
  const auto best = std::max_element(out.paragraph_scores.begin(), out.paragraph_scores.end());
  out.score = *best;
  out.top_paragraph_index = static_cast<std::size_t>(best - out.paragraph_scores.begin());
  out.model_version = model.version();
  return out;
}

template <typename T>
ScoredPrediction score_article(const Model<T>& model, const Article& article, const SentenceSplitter& splitter) {
  if (model.ip()) return ip_score(model, article.headline, article.paragraphs, splitter);
  ScoredPrediction out;
  out.score = model.score(Document{article.headline, article.paragraphs});
  out.model_version = model.version();
  return out;
}

#define BAITWATCH_INSTANTIATE(T)                                                                                   \
  template Var<T> gru_step<T>(ad::Graph<T>&, const GruParams<T>&, Var<T>, Var<T>);                               \
  template EncodedSequence<T> run_gru<T>(ad::Graph<T>&, const GruParams<T>&, std::span<const Var<T>>);          \
  template EncodedSequence<T> encode_tokens<T>(ad::Graph<T>&, const GruParams<T>&, const ad::Parameter<T>&,      \
                                               std::span<const TokenId>);                                        \
  template Var<T> conv_encode<T>(ad::Graph<T>&, const ConvParams<T>&, std::span<const Var<T>>);                 \
  template AttentionResult<T> attention_pool<T>(ad::Graph<T>&, const AttentionParams<T>&,                        \
                                                std::span<const Var<T>>, Var<T>);                                \
  template Var<T> bilinear_logit<T>(ad::Graph<T>&, const BilinearScorer<T>&, Var<T>, Var<T>);                   \
  template class Model<T>;                                                                                       \
  template ScoredPrediction ip_score<T>(const Model<T>&, std::span<const TokenId>, std::span<const TokenSeq>,    \
                                        const SentenceSplitter&);                                                \
  template ScoredPrediction score_article<T>(const Model<T>&, const Article&, const SentenceSplitter&);

BAITWATCH_INSTANTIATE(float)
BAITWATCH_INSTANTIATE(double)

#undef BAITWATCH_INSTANTIATE

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace baitwatch
