#pragma once

#include "fgan/core/error.hpp"
#include "fgan/core/layers.hpp"

namespace fgan::gan {

/// Self-attention over spatial positions of x[B,C,H,W].
///
/// With f = Wf x, g = Wg x, h = Wh x (1x1 projections, weights [C',C,1,1]):
///   s_ij = f_i . g_j,  beta_ji = softmax_i(s_ij),  o_j = sum_i beta_ji h_i,  y = x + gamma o.
/// Without gradient recording the attention map is evaluated in row blocks so memory stays
/// linear in the number of positions.
Var self_attention(const Var& x, const Var& wf, const Var& wg, const Var& wh, const Var& gamma);

class SelfAttention : public Module {
 public:
  /// f and g reduce to max(1, C/8) channels; h keeps C. gamma starts at exactly zero.
  SelfAttention(int channels, Rng& rng, bool spectral_norm = false);

  Var forward(const Var& x) const;

  int channels() const { return channels_; }
  int reduced_channels() const { return f_.out_channels(); }
  const Conv2d& f() const { return f_; }
  const Conv2d& g() const { return g_; }
  const Conv2d& h() const { return h_; }
  const Var& gamma() const { return gamma_; }

 private:
  int channels_;
  Conv2d f_, g_, h_;
  Var gamma_;
};

}  // namespace fgan::gan
