#include "fgan/core/optim.hpp"

#include <cmath>

#include "fgan/core/error.hpp"

namespace fgan {

void Optimizer::zero_grad() {
  for (auto& p : params_)
    if (p.has_grad()) p.node()->grad.fill(0);
}

Real Optimizer::clip_grad_norm(Real max_norm) {
  Real sq = 0;
  for (auto& p : params_)
    if (p.has_grad())
      for (Real g : p.grad().values()) sq += g * g;
  const Real norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    const Real k = max_norm / norm;
    for (auto& p : params_)
      if (p.has_grad())
        for (Real& g : p.mutable_grad().storage()) g *= k;
  }
  return norm;
}

Adam::Adam(std::vector<Var> params, Real lr, Real beta1, Real beta2, Real eps)
    : Optimizer(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (lr <= 0) throw ConfigError("learning rate must be positive");
  lr_ = lr;
  for (auto& p : params_) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void Adam::step() {
  ++t_;
  const Real c1 = 1 - std::pow(beta1_, static_cast<Real>(t_));
  const Real c2 = 1 - std::pow(beta2_, static_cast<Real>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Var& p = params_[k];
    if (!p.has_grad()) continue;
    Tensor& w = p.mutable_value();
    const Tensor& g = p.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m_[k][i] = beta1_ * m_[k][i] + (1 - beta1_) * g[i];
      v_[k][i] = beta2_ * v_[k][i] + (1 - beta2_) * g[i] * g[i];
      const Real mh = m_[k][i] / c1;
      const Real vh = v_[k][i] / c2;
      w[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

SgdMomentum::SgdMomentum(std::vector<Var> params, Real lr, Real momentum)
    : Optimizer(std::move(params)), momentum_(momentum) {
  if (lr <= 0) throw ConfigError("learning rate must be positive");
  if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
  lr_ = lr;
  for (auto& p : params_) velocity_.emplace_back(p.shape());
}

void SgdMomentum::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Var& p = params_[k];
    if (!p.has_grad()) continue;
    Tensor& w = p.mutable_value();
    const Tensor& g = p.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      velocity_[k][i] = momentum_ * velocity_[k][i] + g[i];
      w[i] -= lr_ * velocity_[k][i];
    }
  }
}

}  // namespace fgan
