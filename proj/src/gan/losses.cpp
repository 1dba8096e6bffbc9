#include "fgan/gan/losses.hpp"

#include "fgan/core/ops.hpp"

namespace fgan::gan {

Var hinge_d_loss(const Var& real_scores, const Var& fake_scores) {
  if (real_scores.value().size() == 0 || fake_scores.value().size() == 0) throw EmptyBatch("hinge loss needs scores");
  const Var real_term = ops::mean(ops::relu(ops::add_scalar(ops::scale(real_scores, -1.0), 1.0)));
  const Var fake_term = ops::mean(ops::relu(ops::add_scalar(fake_scores, 1.0)));
  return ops::add(real_term, fake_term);
}

Var hinge_g_loss(const Var& fake_scores) {
  if (fake_scores.value().size() == 0) throw EmptyBatch("hinge loss needs scores");
  return ops::scale(ops::mean(fake_scores), -1.0);
}

GANLosses combine_losses(double l_d, double l_g, double l_t, double lambda) {
  if (lambda < 0) throw NegativeLambda("lambda must be non-negative, got " + std::to_string(lambda));
  return {l_d, l_g, l_t, l_d + lambda * l_t, l_g + lambda * l_t, lambda};
}

}  // namespace fgan::gan
