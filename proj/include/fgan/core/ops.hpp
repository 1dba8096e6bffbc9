#pragma once

#include <vector>

#include "fgan/core/autograd.hpp"

/// Differentiable tensor operations. Image tensors are NCHW; matrices are [rows, cols].
namespace fgan::ops {

// Elementwise
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, Real s);
Var add_scalar(const Var& a, Real s);
/// s * x with s a one-element variable.
Var scale_by(const Var& x, const Var& s);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var detach(const Var& x);

// Reductions
Var sum(const Var& x);
Var mean(const Var& x);
/// [N,C,H,W] -> [N,C], summing over space.
Var global_sum_pool(const Var& x);
/// [N,C,H,W] -> [N,C], averaging over space.
Var global_avg_pool(const Var& x);
/// Row-wise inner products of two [N,K] matrices -> [N].
Var row_dot(const Var& a, const Var& b);

// Shape
Var reshape(const Var& x, std::vector<int> shape);
/// Concatenation along axis 1 (channels for NCHW, columns for matrices).
Var concat1(const std::vector<Var>& xs);
/// [B,M,N] -> [B,N,M].
Var transpose12(const Var& x);

// Linear algebra
/// [M,K] x [K,N] -> [M,N].
Var matmul(const Var& a, const Var& b);
/// Batched product of rank-3 operands with optional transposition of either side.
Var bmm(const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);
/// x[M,N] + b[N] broadcast over rows.
Var add_row_bias(const Var& x, const Var& b);
/// x[B,L,A] + y[B,A] broadcast over L.
Var add_broadcast_mid(const Var& x, const Var& y);

// Convolution and resampling
struct ConvGeometry {
  int stride = 1;
  int pad = 0;
};
/// x[N,C,H,W] * w[O,C,kh,kw] (+ bias[O]) -> [N,O,Ho,Wo].
Var conv2d(const Var& x, const Var& w, const Var* bias, ConvGeometry geo);
Var avg_pool2(const Var& x);
Var max_pool2(const Var& x);
Var upsample_nearest2(const Var& x);

// Normalization
struct BatchNormState {
  Tensor running_mean;
  Tensor running_var;
  Real momentum = 0.1;
  Real eps = 1e-5;
};
/// Normalizes each channel over (N,H,W); updates running statistics when training.
Var batch_norm(const Var& x, BatchNormState& state, bool training);
/// x[N,C,H,W] * gain + bias where gain/bias are either [C] or per-sample [N,C].
Var channel_affine(const Var& x, const Var& gain, const Var& bias);

// Softmax family
Var softmax_last(const Var& x);
Var log_softmax_last(const Var& x);
/// Sum over rows of -log softmax(logits)[row, target]; rows whose target equals ignore_id are skipped.
Var cross_entropy_sum(const Var& logits, const std::vector<int>& targets, int ignore_id);

/// Rows of table[V,E] selected by ids -> [ids.size(), E].
Var embedding(const Var& table, const std::vector<int>& ids);

/// Spectrally normalized view of a weight, reshaped to [rows, rest]. u is the persistent
/// left singular vector estimate, refreshed by one power iteration when update is true.
/// The estimate is treated as constant for differentiation.
Var spectral_normalize(const Var& w, Tensor& u, bool update);

}  // namespace fgan::ops
