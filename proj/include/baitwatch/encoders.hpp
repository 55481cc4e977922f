#pragma once

// Headline/body encoders and the bilinear incongruence scorer.
//
//   RDE   word GRU over the headline and over the flattened body
//   CDE   convolution (widths 3, 4, 5) with max-over-time pooling
//   HRDE  word GRU per unit, then a unit-level GRU; the headline is a
//         one-unit document
//   AHDE  HRDE with a bidirectional unit-level GRU and headline-conditioned
//         attention pooling over the body states
//   HRE   mean word embedding per unit, then a unit-level GRU; the headline
//         is its mean embedding
//
// Every kind ends in p = sigmoid(u_H^T M u_B + b). With the independent
// paragraph (IP) flag each paragraph is scored against the headline on its
// own and the article score is the maximum.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "baitwatch/autodiff.hpp"
#include "baitwatch/optim.hpp"
#include "baitwatch/textcorpus.hpp"

namespace baitwatch {

enum class ModelKind : std::uint8_t { rde = 0, cde = 1, hrde = 2, ahde = 3, hre = 4 };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);
// Kinds whose lower level reads sentences when paragraphs are scored
// independently.
bool is_hierarchical(ModelKind kind);

inline constexpr std::size_t kConvWidths[] = {3, 4, 5};

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t embedding = 300;
  std::size_t word_hidden = 64;
  std::size_t paragraph_hidden = 64;
  std::size_t attention = 0;  // 0 means the attended state size
  std::size_t conv_filters = 100;  // per width

  bool operator==(const ModelDims&) const = default;
};

template <typename T>
struct GruParams {
  const ad::Parameter<T>* w_z;
  const ad::Parameter<T>* w_r;
  const ad::Parameter<T>* w_h;
  const ad::Parameter<T>* u_z;
  const ad::Parameter<T>* u_r;
  const ad::Parameter<T>* u_h;
  const ad::Parameter<T>* b_z;
  const ad::Parameter<T>* b_r;
  const ad::Parameter<T>* b_h;
};

template <typename T>
struct ConvParams {
  // One [filters x (width * embedding)] matrix and bias per width.
  std::vector<const ad::Parameter<T>*> filters;
  std::vector<const ad::Parameter<T>*> biases;
  std::vector<std::size_t> widths;
};

template <typename T>
struct AttentionParams {
  const ad::Parameter<T>* w_body;      // [attention x state]
  const ad::Parameter<T>* w_headline;  // [attention x state]
  const ad::Parameter<T>* v;           // [attention]
};

template <typename T>
struct BilinearScorer {
  const ad::Parameter<T>* m;  // [headline dim x body dim]
  const ad::Parameter<T>* b;  // [1]
};

// z = s(W_z x + U_z h + b_z), r = s(W_r x + U_r h + b_r),
// c = tanh(W_h x + U_h (r * h) + b_h), h' = (1 - z) * h + z * c
template <typename T>
ad::Var<T> gru_step(ad::Graph<T>& g, const GruParams<T>& p, ad::Var<T> h_prev, ad::Var<T> x);

template <typename T>
struct EncodedSequence {
  ad::Var<T> final;
  std::vector<ad::Var<T>> states;
};

// Runs the GRU from h = 0 over the embedded tokens, skipping padding.
// Throws std::invalid_argument("empty sequence") if nothing remains.
template <typename T>
EncodedSequence<T> encode_tokens(ad::Graph<T>& g, const GruParams<T>& gru, const ad::Parameter<T>& embeddings,
                                 std::span<const TokenId> tokens);

// Runs the GRU from h = 0 over already-encoded inputs.
template <typename T>
EncodedSequence<T> run_gru(ad::Graph<T>& g, const GruParams<T>& gru, std::span<const ad::Var<T>> inputs);

// Valid convolution per filter and max over time, concatenated over widths.
// Inputs shorter than the widest filter are padded with zero vectors.
template <typename T>
ad::Var<T> conv_encode(ad::Graph<T>& g, const ConvParams<T>& p, std::span<const ad::Var<T>> embedded);

template <typename T>
struct AttentionResult {
  ad::Var<T> weights;
  ad::Var<T> context;
};

// s_p = v^T tanh(W_B u_p + W_H u_H), a = softmax(s), context = sum_p a_p u_p.
template <typename T>
AttentionResult<T> attention_pool(ad::Graph<T>& g, const AttentionParams<T>& p, std::span<const ad::Var<T>> states,
                                  ad::Var<T> headline);

// u_H^T M u_B + b, before the sigmoid.
template <typename T>
ad::Var<T> bilinear_logit(ad::Graph<T>& g, const BilinearScorer<T>& s, ad::Var<T> headline, ad::Var<T> body);

template <typename T>
ad::Var<T> bilinear_score(ad::Graph<T>& g, const BilinearScorer<T>& s, ad::Var<T> headline, ad::Var<T> body) {
  return ad::sigmoid(bilinear_logit(g, s, headline, body));
}

struct ScoredPrediction {
  double score = 0.0;
  std::vector<double> paragraph_scores;  // filled for IP models
  std::size_t top_paragraph_index = 0;
  std::string model_version;
};

template <typename T>
class Model {
 public:
  using Tensors = std::map<std::string, ad::Tensor<T>>;

  // Random initialization, deterministic in `seed`.
  static Model create(ModelKind kind, const ModelDims& dims, bool ip, std::uint64_t seed);
  // Throws std::invalid_argument unless the tensors are exactly the set the
  // kind requires, with mutually consistent shapes.
  static Model from_tensors(ModelKind kind, bool ip, Tensors tensors);
  // Expected tensor names and shapes.
  static std::map<std::string, ad::Shape> layout(ModelKind kind, const ModelDims& dims);

  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&& other) noexcept;
  Model& operator=(Model&& other) noexcept;

  ModelKind kind() const { return kind_; }
  bool ip() const { return ip_; }
  const ModelDims& dims() const { return dims_; }

  std::vector<ad::NamedParameter<T>> parameters();
  const std::map<std::string, ad::Parameter<T>>& tensors() const { return params_; }
  ad::Parameter<T>& parameter(const std::string& name);

  // Pre-sigmoid score of one headline/units pair.
  ad::Var<T> logit(ad::Graph<T>& g, const Document& doc) const;
  double score(const Document& doc) const;

  // Content hash over kind, IP flag and every tensor's bytes (16 hex chars).
  std::string version() const;

  template <typename U>
  Model<U> cast() const;

 private:
  Model(ModelKind kind, bool ip, ModelDims dims) : kind_(kind), ip_(ip), dims_(dims) {}
  void bind();
  GruParams<T> gru(const std::string& prefix) const;
  ConvParams<T> conv(const std::string& prefix) const;
  const ad::Parameter<T>* find(const std::string& name) const;

  ad::Var<T> rde(ad::Graph<T>& g, const Document& doc) const;
  ad::Var<T> cde(ad::Graph<T>& g, const Document& doc) const;
  ad::Var<T> hrde(ad::Graph<T>& g, const Document& doc) const;
  ad::Var<T> ahde(ad::Graph<T>& g, const Document& doc) const;
  ad::Var<T> hre(ad::Graph<T>& g, const Document& doc) const;

  ModelKind kind_;
  bool ip_;
  ModelDims dims_;
  std::map<std::string, ad::Parameter<T>> params_;

  struct Bound {
    const ad::Parameter<T>* embedding = nullptr;
    GruParams<T> headline_word{}, body_word{}, headline_para{}, body_para{};
    GruParams<T> headline_bwd{}, body_bwd{};
    ConvParams<T> headline_conv, body_conv;
    AttentionParams<T> attention{};
    BilinearScorer<T> scorer{};
  } bound_;
};

// Units the model reads for one paragraph under IP: its sentences for
// hierarchical kinds, otherwise the paragraph itself.
std::vector<TokenSeq> ip_units(ModelKind kind, std::span<const TokenId> paragraph, const SentenceSplitter& splitter);

// Scores each (headline, paragraph) pair independently; the article score is
// the maximum, ties resolved to the lowest paragraph index.
template <typename T>
ScoredPrediction ip_score(const Model<T>& model, std::span<const TokenId> headline,
                          std::span<const TokenSeq> paragraphs, const SentenceSplitter& splitter = {});

// Dispatches on the model's IP flag.
template <typename T>
ScoredPrediction score_article(const Model<T>& model, const Article& article, const SentenceSplitter& splitter = {});

}  // namespace baitwatch
