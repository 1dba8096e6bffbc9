#include "fgan/gan/attention.hpp"

#include <Eigen/Dense>
#include <algorithm>

namespace fgan::gan {

namespace {

using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;

// o = sum_i beta_ji h_i evaluated block by block over j, for inference.
Tensor attend_blocked(const Tensor& f, const Tensor& g, const Tensor& h) {
  const int B = h.dim(0), C = h.dim(1), Cr = f.dim(1), N = h.dim(2);
  const int block = std::max(1, std::min(N, (1 << 22) / std::max(N, 1)));
  Tensor o({B, C, N});
  for (int b = 0; b < B; ++b) {
    ConstMap F(f.data() + static_cast<std::size_t>(b) * Cr * N, Cr, N);
    ConstMap G(g.data() + static_cast<std::size_t>(b) * Cr * N, Cr, N);
    ConstMap H(h.data() + static_cast<std::size_t>(b) * C * N, C, N);
    Eigen::Map<RowMatrix> O(o.data() + static_cast<std::size_t>(b) * C * N, C, N);
    for (int j0 = 0; j0 < N; j0 += block) {
      const int nb = std::min(block, N - j0);
      Eigen::MatrixXd S = F.transpose() * G.middleCols(j0, nb);  // [N_i, nb]
      for (int j = 0; j < nb; ++j) {
        auto col = S.col(j);
        col = (col.array() - col.maxCoeff()).exp();
        col /= col.sum();
      }
      O.middleCols(j0, nb) = H * S;
    }
  }
  return o;
}

}  // namespace

Var self_attention(const Var& x, const Var& wf, const Var& wg, const Var& wh, const Var& gamma) {
  if (x.value().rank() != 4) throw ShapeMismatch("self_attention expects [B,C,H,W], got " + x.value().shape_string());
  const int B = x.dim(0), C = x.dim(1), N = x.dim(2) * x.dim(3);
  if (wh.value().rank() != 4 || wh.dim(1) != C || wh.dim(0) != C || wf.dim(1) != C || wg.dim(1) != C ||
      wf.dim(0) != wg.dim(0))
    throw ShapeMismatch("attention projections do not match " + std::to_string(C) + " input channels");
  const int Cr = wf.dim(0);
  const ops::ConvGeometry geo{1, 0};
  const Var f = ops::reshape(ops::conv2d(x, wf, nullptr, geo), {B, Cr, N});
  const Var g = ops::reshape(ops::conv2d(x, wg, nullptr, geo), {B, Cr, N});
  const Var h = ops::reshape(ops::conv2d(x, wh, nullptr, geo), {B, C, N});
  Var o;
  if (grad_enabled()) {
    const Var s = ops::bmm(f, g, /*trans_a=*/true);             // [B, i, j]
    const Var beta = ops::softmax_last(ops::transpose12(s));   // [B, j, i]
    o = ops::bmm(h, beta, false, /*trans_b=*/true);            // [B, C, j]
  } else {
    o = constant(attend_blocked(f.value(), g.value(), h.value()));
  }
  return ops::add(x, ops::scale_by(ops::reshape(o, x.shape()), gamma));
}

SelfAttention::SelfAttention(int channels, Rng& rng, bool spectral_norm)
    : channels_(channels),
      f_(channels, std::max(1, channels / 8), 1, 1, 0, false, rng, spectral_norm),
      g_(channels, std::max(1, channels / 8), 1, 1, 0, false, rng, spectral_norm),
      h_(channels, channels, 1, 1, 0, false, rng, spectral_norm) {
  register_module("f", &f_);
  register_module("g", &g_);
  register_module("h", &h_);
  gamma_ = register_parameter("gamma", Tensor({1}));
}

Var SelfAttention::forward(const Var& x) const {
  return self_attention(x, f_.effective_weight(), g_.effective_weight(), h_.effective_weight(), gamma_);
}

}  // namespace fgan::gan
