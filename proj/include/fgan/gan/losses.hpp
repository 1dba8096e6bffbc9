#pragma once

#include "fgan/core/autograd.hpp"
#include "fgan/core/error.hpp"

namespace fgan::gan {

FGAN_DEFINE_ERROR(NegativeLambda);

/// mean(max(0, 1 - real)) + mean(max(0, 1 + fake)).
Var hinge_d_loss(const Var& real_scores, const Var& fake_scores);
/// -mean(fake).
Var hinge_g_loss(const Var& fake_scores);

struct GANLosses {
  double l_d = 0, l_g = 0, l_t = 0;
  double l_dt = 0, l_gt = 0;
  double lambda = 0;
};

/// l_dt = l_d + lambda l_t and l_gt = l_g + lambda l_t.
GANLosses combine_losses(double l_d, double l_g, double l_t, double lambda);

}  // namespace fgan::gan
