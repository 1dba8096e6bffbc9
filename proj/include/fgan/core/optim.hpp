#pragma once

#include <vector>

#include "fgan/core/autograd.hpp"

namespace fgan {

class Optimizer {
 public:
  explicit Optimizer(std::vector<Var> params) : params_(std::move(params)) {}
  virtual ~Optimizer() = default;
  virtual void step() = 0;
  void zero_grad();
  /// Rescales gradients so their global L2 norm is at most max_norm; returns the norm before clipping.
  Real clip_grad_norm(Real max_norm);
  void set_lr(Real lr) { lr_ = lr; }
  Real lr() const { return lr_; }
  const std::vector<Var>& params() const { return params_; }

 protected:
  std::vector<Var> params_;
  Real lr_ = 1e-3;
};

/// Adaptive-moment method with bias correction.
class Adam : public Optimizer {
 public:
  Adam(std::vector<Var> params, Real lr, Real beta1, Real beta2, Real eps = 1e-8);
  void step() override;

 private:
  Real beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

/// Stochastic gradient descent with classical momentum: v = mu v + g; p -= lr v.
class SgdMomentum : public Optimizer {
 public:
  SgdMomentum(std::vector<Var> params, Real lr, Real momentum);
  void step() override;

 private:
  Real momentum_;
  std::vector<Tensor> velocity_;
};

}  // namespace fgan
