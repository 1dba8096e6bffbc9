#include "fgan/recognizer/decoder.hpp"

#include <numeric>
#include <string>

namespace fgan::recognizer {

void DecoderConfig::validate() const {
  if (vocab_size < 5) throw ConfigError("decoder: vocabulary must hold the specials and at least one token");
  if (embed_dim < 1 || hidden_dim < 1 || attention_dim < 1) throw ConfigError("decoder: dimensions must be positive");
}

AttentionOutput additive_attention(const Var& keys, const Var& query, const Var& v, const Var& values) {
  if (keys.shape().size() != 3 || values.shape().size() != 3 || query.shape().size() != 2)
    throw ShapeMismatch("additive_attention: expected keys[B,L,A], query[B,A], values[B,L,C]");
  const int B = keys.dim(0), L = keys.dim(1), A = keys.dim(2);
  if (query.dim(0) != B || query.dim(1) != A || values.dim(0) != B || values.dim(1) != L || v.value().size() != static_cast<std::size_t>(A))
    throw ShapeMismatch("additive_attention: inconsistent operand shapes");
  const Var energy = ops::tanh(ops::add_broadcast_mid(keys, query));
  const Var scores = ops::reshape(ops::matmul(ops::reshape(energy, {B * L, A}), ops::reshape(v, {A, 1})), {B, L});
  const Var weights = ops::softmax_last(scores);
  const Var context = ops::bmm(ops::reshape(weights, {B, 1, L}), values);
  return {ops::reshape(context, {B, values.dim(2)}), weights};
}

Var select_rows(const Var& x, const std::vector<int>& ids) {
  const int rows = x.dim(0);
  const int rest = static_cast<int>(x.value().size() / rows);
  std::vector<int> shape = x.shape();
  shape[0] = static_cast<int>(ids.size());
  return ops::reshape(ops::embedding(ops::reshape(x, {rows, rest}), ids), shape);
}

EncodedBatch EncodedBatch::select(const std::vector<int>& ids) const {
  EncodedBatch out;
  for (const auto& v : values) out.values.push_back(select_rows(v, ids));
  for (const auto& k : keys) out.keys.push_back(select_rows(k, ids));
  out.pooled = select_rows(pooled, ids);
  return out;
}

struct AttentionHead : Module {
  AttentionHead(int channels, int hidden, int attention, Rng& rng)
      : query(hidden, attention, false, rng), key(channels, attention, true, rng) {
    register_module("query", &query);
    register_module("key", &key);
    score = register_parameter("score", xavier_uniform({attention, 1}, attention, 1, rng));
  }
  Linear query, key;
  Var score;
};

struct AttentionDecoder::Impl {
  Impl(const DecoderConfig& cfg, const std::vector<int>& channels, Rng& rng)
      : total_channels(std::accumulate(channels.begin(), channels.end(), 0)),
        embed(cfg.vocab_size, cfg.embed_dim, rng),
        init(channels.front(), cfg.hidden_dim, true, rng),
        gru(cfg.embed_dim + total_channels, cfg.hidden_dim, rng),
        deep(cfg.hidden_dim + total_channels + cfg.embed_dim, cfg.embed_dim, true, rng),
        out(cfg.embed_dim, cfg.vocab_size, true, rng) {
    for (int c : channels) heads.push_back(std::make_unique<AttentionHead>(c, cfg.hidden_dim, cfg.attention_dim, rng));
  }
  int total_channels;
  Embedding embed;
  Linear init;
  std::vector<std::unique_ptr<AttentionHead>> heads;
  GRUCell gru;
  Linear deep, out;
};

AttentionDecoder::AttentionDecoder(const DecoderConfig& cfg, const std::vector<int>& feature_channels, Rng& rng)
    : cfg_(cfg) {
  cfg.validate();
  if (feature_channels.empty()) throw ConfigError("decoder: at least one feature scale is required");
  impl_ = std::make_unique<Impl>(cfg, feature_channels, rng);
  register_module("embed", &impl_->embed);
  register_module("init", &impl_->init);
  for (std::size_t s = 0; s < impl_->heads.size(); ++s)
    register_module("attention" + std::to_string(s + 1), impl_->heads[s].get());
  register_module("gru", &impl_->gru);
  register_module("deep", &impl_->deep);
  register_module("out", &impl_->out);
}

AttentionDecoder::~AttentionDecoder() = default;

EncodedBatch AttentionDecoder::prepare(const std::vector<Var>& features) const {
  if (features.size() != impl_->heads.size()) throw ShapeMismatch("decoder: scale count differs from configuration");
  EncodedBatch enc;
  for (std::size_t s = 0; s < features.size(); ++s) {
    const Var& f = features[s];
    const int B = f.dim(0), C = f.dim(1), L = f.dim(2) * f.dim(3);
    if (C != impl_->heads[s]->key.in_features()) throw ShapeMismatch("decoder: feature channels differ from configuration");
    const Var values = ops::transpose12(ops::reshape(f, {B, C, L}));
    enc.values.push_back(values);
    const Var keys = impl_->heads[s]->key.forward(ops::reshape(values, {B * L, C}));
    enc.keys.push_back(ops::reshape(keys, {B, L, cfg_.attention_dim}));
  }
  enc.pooled = ops::global_avg_pool(features.front());
  return enc;
}

DecoderState AttentionDecoder::initial_state(const EncodedBatch& enc, int start_token) const {
  DecoderState s;
  s.hidden = ops::tanh(impl_->init.forward(enc.pooled));
  s.prev_tokens.assign(enc.batch(), start_token);
  s.context = constant(Tensor({enc.batch(), impl_->total_channels}));
  return s;
}

AttentionOutput AttentionDecoder::attend(const Var& hidden, const EncodedBatch& enc, int scale) const {
  const AttentionHead& head = *impl_->heads.at(scale);
  return additive_attention(enc.keys[scale], head.query.forward(hidden), head.score, enc.values[scale]);
}

StepOutput AttentionDecoder::step(const DecoderState& state, const EncodedBatch& enc) const {
  if (static_cast<int>(state.prev_tokens.size()) != enc.batch() || state.hidden.dim(0) != enc.batch())
    throw ShapeMismatch("decoder step: state and features disagree on batch size");
  StepOutput out;
  std::vector<Var> contexts;
  for (std::size_t s = 0; s < impl_->heads.size(); ++s) {
    AttentionOutput a = attend(state.hidden, enc, static_cast<int>(s));
    contexts.push_back(a.context);
    out.state.weights.push_back(a.weights);
  }
  const Var ctx = contexts.size() == 1 ? contexts.front() : ops::concat1(contexts);
  const Var emb = impl_->embed.forward(state.prev_tokens);
  out.state.hidden = impl_->gru.forward(ops::concat1({emb, ctx}), state.hidden);
  out.state.context = ctx;
  const Var deep = ops::tanh(impl_->deep.forward(ops::concat1({out.state.hidden, ctx, emb})));
  out.logits = impl_->out.forward(deep);
  return out;
}

}  // namespace fgan::recognizer
