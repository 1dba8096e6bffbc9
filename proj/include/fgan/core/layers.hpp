#pragma once

#include <optional>

#include "fgan/core/module.hpp"
#include "fgan/core/ops.hpp"
#include "fgan/core/random.hpp"

namespace fgan {

/// Orthogonal matrix of shape [rows, prod(rest)] reshaped to `shape`, scaled by gain.
Tensor orthogonal_init(const std::vector<int>& shape, Rng& rng, Real gain = 1.0);
Tensor xavier_uniform(const std::vector<int>& shape, int fan_in, int fan_out, Rng& rng);

class Conv2d : public Module {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool bias, Rng& rng,
         bool spectral_norm = false);
  Var forward(const Var& x) const;
  /// Weight as used in the forward pass (spectrally normalized when enabled).
  Var effective_weight() const;

  const Var& weight() const { return weight_; }
  int in_channels() const { return in_; }
  int out_channels() const { return out_; }

 private:
  int in_, out_;
  ops::ConvGeometry geo_;
  Var weight_;
  std::optional<Var> bias_;
  bool spectral_norm_;
  mutable Tensor sn_u_;
};

/// y = x W + b with W stored [in, out].
class Linear : public Module {
 public:
  Linear(int in_features, int out_features, bool bias, Rng& rng, bool spectral_norm = false);
  Var forward(const Var& x) const;

  const Var& weight() const { return weight_; }
  const Var& bias() const { return *bias_; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_, out_;
  Var weight_;
  std::optional<Var> bias_;
  bool spectral_norm_;
  mutable Tensor sn_u_;
};

class BatchNorm2d : public Module {
 public:
  BatchNorm2d(int channels, bool affine = true, Real momentum = 0.1);
  /// Normalization without the affine part; shared with the conditional variant.
  Var normalize(const Var& x) const;
  Var forward(const Var& x) const;
  const ops::BatchNormState& state() const { return state_; }
  void set_momentum(Real momentum) { state_.momentum = momentum; }
  /// Running mean back to 0 and running variance back to 1.
  void reset_running_stats();

 private:
  mutable ops::BatchNormState state_;
  std::optional<Var> gamma_, beta_;
};

/// Batch normalization whose per-sample gain and bias are affine projections of a
/// conditioning vector. The gain projection bias starts at one, the bias projection at zero.
class ConditionalBatchNorm2d : public Module {
 public:
  ConditionalBatchNorm2d(int channels, int cond_dim, Rng& rng, Real momentum = 0.1);
  Var forward(const Var& x, const Var& cond) const;
  /// Per-sample gains and biases [N, C] for a conditioning batch [N, cond_dim].
  std::pair<Var, Var> gains_and_biases(const Var& cond) const;

  const Linear& gain_projection() const { return gain_proj_; }
  const Linear& bias_projection() const { return bias_proj_; }

 private:
  BatchNorm2d bn_;
  Linear gain_proj_, bias_proj_;
};

class Embedding : public Module {
 public:
  Embedding(int count, int dim, Rng& rng, Real stddev = 0.1);
  Var forward(const std::vector<int>& ids) const;
  const Var& table() const { return table_; }

 private:
  Var table_;
};

/// Gated recurrent unit: r = s(x Wr + h Ur), z = s(x Wz + h Uz),
/// n = tanh(x Wn + r * (h Un + bn)), h' = (1 - z) * n + z * h.
class GRUCell : public Module {
 public:
  GRUCell(int input_size, int hidden_size, Rng& rng);
  Var forward(const Var& x, const Var& h) const;
  int hidden_size() const { return hidden_; }

 private:
  int hidden_;
  Linear xr_, xz_, xn_, hr_, hz_, hn_;
};

/// Replaces the running statistics of every BatchNorm2d inside `model` by the exact average
/// of the batch statistics seen while `run_batch(k)` runs for k = 0..num_batches-1 in training
/// mode without gradient recording. Momentum and the training flag are restored afterwards.
void recalibrate_batchnorm(Module& model, int num_batches, const std::function<void(int)>& run_batch);

}  // namespace fgan
