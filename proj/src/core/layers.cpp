#include "fgan/core/layers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "fgan/core/error.hpp"

namespace fgan {

Tensor orthogonal_init(const std::vector<int>& shape, Rng& rng, Real gain) {
  const int rows = shape.at(0);
  const int cols = static_cast<int>(shape_numel(shape) / rows);
  const int big = std::max(rows, cols), small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (int i = 0; i < big; ++i)
    for (int j = 0; j < small; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  // Sign fix so the distribution is uniform over orthogonal matrices.
  Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j)
    if (r(j, j) < 0) q.col(j) *= -1;
  Tensor t(shape);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t[static_cast<std::size_t>(i) * cols + j] = gain * (rows >= cols ? q(i, j) : q(j, i));
  return t;
}

Tensor xavier_uniform(const std::vector<int>& shape, int fan_in, int fan_out, Rng& rng) {
  const Real a = std::sqrt(6.0 / (fan_in + fan_out));
  return rng.uniform_tensor(shape, -a, a);
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool bias, Rng& rng,
               bool spectral_norm)
    : in_(in_channels), out_(out_channels), geo_{stride, pad}, spectral_norm_(spectral_norm) {
  weight_ = register_parameter("weight", orthogonal_init({out_channels, in_channels, kernel, kernel}, rng));
  if (bias) bias_ = register_parameter("bias", Tensor({out_channels}));
  if (spectral_norm_) {
    sn_u_ = rng.normal_tensor({out_channels});
    Real norm = std::sqrt(std::inner_product(sn_u_.data(), sn_u_.data() + sn_u_.size(), sn_u_.data(), Real{0}));
    for (auto& v : sn_u_.storage()) v /= norm;
    register_buffer("sn_u", &sn_u_);
  }
}

Var Conv2d::effective_weight() const {
  if (!spectral_norm_) return weight_;
  return ops::spectral_normalize(weight_, sn_u_, training() && grad_enabled());
}

Var Conv2d::forward(const Var& x) const {
  if (x.value().rank() != 4 || x.dim(1) != in_)
    throw ShapeMismatch("Conv2d expects " + std::to_string(in_) + " channels, got " + x.value().shape_string());
  const Var w = effective_weight();
  return ops::conv2d(x, w, bias_ ? &*bias_ : nullptr, geo_);
}

Linear::Linear(int in_features, int out_features, bool bias, Rng& rng, bool spectral_norm)
    : in_(in_features), out_(out_features), spectral_norm_(spectral_norm) {
  weight_ = register_parameter("weight", xavier_uniform({in_features, out_features}, in_features, out_features, rng));
  if (bias) bias_ = register_parameter("bias", Tensor({out_features}));
  if (spectral_norm_) {
    sn_u_ = rng.normal_tensor({in_features});
    Real norm = std::sqrt(std::inner_product(sn_u_.data(), sn_u_.data() + sn_u_.size(), sn_u_.data(), Real{0}));
    for (auto& v : sn_u_.storage()) v /= norm;
    register_buffer("sn_u", &sn_u_);
  }
}

Var Linear::forward(const Var& x) const {
  if (x.value().rank() != 2 || x.dim(1) != in_)
    throw ShapeMismatch("Linear expects [*, " + std::to_string(in_) + "], got " + x.value().shape_string());
  Var w = spectral_norm_ ? ops::spectral_normalize(weight_, sn_u_, training() && grad_enabled()) : weight_;
  Var y = ops::matmul(x, w);
  return bias_ ? ops::add_row_bias(y, *bias_) : y;
}

BatchNorm2d::BatchNorm2d(int channels, bool affine, Real momentum) {
  state_.running_mean = Tensor({channels});
  state_.running_var = Tensor({channels}, 1.0);
  state_.momentum = momentum;
  register_buffer("running_mean", &state_.running_mean);
  register_buffer("running_var", &state_.running_var);
  if (affine) {
    gamma_ = register_parameter("gamma", Tensor({channels}, 1.0));
    beta_ = register_parameter("beta", Tensor({channels}));
  }
}

Var BatchNorm2d::normalize(const Var& x) const { return ops::batch_norm(x, state_, training()); }

Var BatchNorm2d::forward(const Var& x) const {
  Var y = normalize(x);
  return gamma_ ? ops::channel_affine(y, *gamma_, *beta_) : y;
}

ConditionalBatchNorm2d::ConditionalBatchNorm2d(int channels, int cond_dim, Rng& rng, Real momentum)
    : bn_(channels, false, momentum), gain_proj_(cond_dim, channels, true, rng), bias_proj_(cond_dim, channels, true, rng) {
  gain_proj_.weight().node()->value = rng.normal_tensor({cond_dim, channels}, 0.02);
  bias_proj_.weight().node()->value = rng.normal_tensor({cond_dim, channels}, 0.02);
  gain_proj_.bias().node()->value.fill(1.0);
  register_module("bn", &bn_);
  register_module("gain", &gain_proj_);
  register_module("bias", &bias_proj_);
}

std::pair<Var, Var> ConditionalBatchNorm2d::gains_and_biases(const Var& cond) const {
  return {gain_proj_.forward(cond), bias_proj_.forward(cond)};
}

Var ConditionalBatchNorm2d::forward(const Var& x, const Var& cond) const {
  if (cond.dim(0) != x.dim(0)) throw ShapeMismatch("ConditionalBatchNorm2d: condition batch size");
  auto [gain, bias] = gains_and_biases(cond);
  return ops::channel_affine(bn_.normalize(x), gain, bias);
}

Embedding::Embedding(int count, int dim, Rng& rng, Real stddev) {
  table_ = register_parameter("table", rng.normal_tensor({count, dim}, stddev));
}

Var Embedding::forward(const std::vector<int>& ids) const { return ops::embedding(table_, ids); }

GRUCell::GRUCell(int input_size, int hidden_size, Rng& rng)
    : hidden_(hidden_size),
      xr_(input_size, hidden_size, true, rng),
      xz_(input_size, hidden_size, true, rng),
      xn_(input_size, hidden_size, true, rng),
      hr_(hidden_size, hidden_size, false, rng),
      hz_(hidden_size, hidden_size, false, rng),
      hn_(hidden_size, hidden_size, true, rng) {
  hr_.weight().node()->value = orthogonal_init({hidden_size, hidden_size}, rng);
  hz_.weight().node()->value = orthogonal_init({hidden_size, hidden_size}, rng);
  hn_.weight().node()->value = orthogonal_init({hidden_size, hidden_size}, rng);
  register_module("xr", &xr_);
  register_module("xz", &xz_);
  register_module("xn", &xn_);
  register_module("hr", &hr_);
  register_module("hz", &hz_);
  register_module("hn", &hn_);
}

Var GRUCell::forward(const Var& x, const Var& h) const {
  using namespace ops;
  Var r = sigmoid(add(xr_.forward(x), hr_.forward(h)));
  Var z = sigmoid(add(xz_.forward(x), hz_.forward(h)));
  Var n = ops::tanh(add(xn_.forward(x), mul(r, hn_.forward(h))));
  // (1 - z) * n + z * h  ==  n + z * (h - n)
  return add(n, mul(z, sub(h, n)));
}

void BatchNorm2d::reset_running_stats() {
  state_.running_mean.fill(0.0);
  state_.running_var.fill(1.0);
}

void recalibrate_batchnorm(Module& model, int num_batches, const std::function<void(int)>& run_batch) {
  if (num_batches < 1) return;
  std::vector<std::pair<BatchNorm2d*, Real>> layers;
  model.apply([&](Module& m) {
    if (auto* bn = dynamic_cast<BatchNorm2d*>(&m)) layers.emplace_back(bn, bn->state().momentum);
  });
  const bool was_training = model.training();
  for (auto& [bn, momentum] : layers) bn->reset_running_stats();
  model.set_training(true);
  {
    NoGradGuard guard;
    for (int k = 0; k < num_batches; ++k) {
      // Cumulative moving average: after batch k the running value is the mean of batches 0..k.
      for (auto& [bn, momentum] : layers) bn->set_momentum(Real{1} / (k + 1));
      run_batch(k);
    }
  }
  for (auto& [bn, momentum] : layers) bn->set_momentum(momentum);
  model.set_training(was_training);
}

}  // namespace fgan
