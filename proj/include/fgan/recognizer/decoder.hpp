#pragma once

#include <memory>
#include <vector>

#include "fgan/core/error.hpp"
#include "fgan/core/layers.hpp"

namespace fgan::recognizer {

struct DecoderConfig {
  int vocab_size = 0;
  int embed_dim = 256;
  int hidden_dim = 256;
  int attention_dim = 256;
  void validate() const;
};

struct AttentionOutput {
  Var context;  // [B, C]
  Var weights;  // [B, L], rows sum to one
};

/// Additive attention: e_l = v . tanh(keys_l + query), alpha = softmax_l(e), context = sum_l alpha_l values_l.
/// keys [B,L,A] already include the feature projection and its bias; query [B,A]; v [A,1]; values [B,L,C].
AttentionOutput additive_attention(const Var& keys, const Var& query, const Var& v, const Var& values);

/// Rows of x (first axis) picked by ids; differentiable. Used to tile one image's features
/// across beam hypotheses and to reorder hidden states.
Var select_rows(const Var& x, const std::vector<int>& ids);

/// Encoder output prepared once per batch for repeated decoding steps.
struct EncodedBatch {
  std::vector<Var> values;  // per scale [B, L, C]
  std::vector<Var> keys;    // per scale [B, L, A]
  Var pooled;               // main-scale mean feature [B, C0]

  int batch() const { return values.front().dim(0); }
  /// Same features for batch rows ids (each id indexes this batch).
  EncodedBatch select(const std::vector<int>& ids) const;
};

struct DecoderState {
  Var hidden;                    // [B, hidden_dim]
  std::vector<int> prev_tokens;  // token consumed by the next step
  Var context;                   // last attention context over all scales [B, sum C]
  std::vector<Var> weights;      // last attention weights per scale
};

struct StepOutput {
  Var logits;  // [B, V]
  DecoderState state;
};

/// GRU decoder with additive attention over each encoder scale.
///
/// One step consumes the previous token y and hidden h:
///   ctx = attention(query = W h),  h' = GRU([emb(y); ctx], h),
///   logits = W_o tanh(W_d [h'; ctx; emb(y)] + b_d).
/// The initial hidden state is tanh(W_0 mean(F) + b_0) over the main scale.
class AttentionDecoder : public Module {
 public:
  AttentionDecoder(const DecoderConfig& cfg, const std::vector<int>& feature_channels, Rng& rng);
  ~AttentionDecoder() override;

  EncodedBatch prepare(const std::vector<Var>& features) const;
  DecoderState initial_state(const EncodedBatch& enc, int start_token) const;
  StepOutput step(const DecoderState& state, const EncodedBatch& enc) const;
  /// Attention alone, for inspection: query from `hidden` against scale s.
  AttentionOutput attend(const Var& hidden, const EncodedBatch& enc, int scale) const;

  const DecoderConfig& config() const { return cfg_; }

 private:
  struct Impl;
  DecoderConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fgan::recognizer
