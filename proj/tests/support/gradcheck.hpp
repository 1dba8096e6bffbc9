#pragma once

// Central finite-difference oracle for reverse-mode gradients. Independent of the backward
// closures it checks: it only perturbs parameter values and re-evaluates the forward pass.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fgan/core/autograd.hpp"

namespace fgan::testing {

struct GradCheckReport {
  double worst_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::string detail;
};

/// Compares analytic gradients of loss_fn() with respect to params against central differences.
/// The error per parameter tensor is ||analytic - numeric|| / max(||analytic||, ||numeric||, floor).
inline GradCheckReport gradcheck(const std::function<Var()>& loss_fn, const std::vector<Var>& params,
                                 double eps = 1e-6, double floor = 1e-9) {
  for (const auto& p : params)
    if (p.has_grad()) p.node()->grad.fill(0);
  Var loss = loss_fn();
  backward(loss);
  std::vector<Tensor> analytic;
  for (const auto& p : params) analytic.push_back(p.has_grad() ? p.grad() : Tensor(p.shape()));

  GradCheckReport report;
  NoGradGuard guard;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& w = params[k].node()->value;
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Real saved = w[i];
      w[i] = saved + eps;
      const double up = loss_fn().item();
      w[i] = saved - eps;
      const double down = loss_fn().item();
      w[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic[k][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    const double rel = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), floor});
    if (rel >= report.worst_relative_error) {
      report.worst_relative_error = rel;
      report.worst_param = k;
      report.detail = "param " + std::to_string(k) + " |analytic|=" + std::to_string(std::sqrt(a2)) +
                      " |numeric|=" + std::to_string(std::sqrt(n2));
    }
  }
  return report;
}

/// Fixed random projection so that non-scalar outputs can be reduced to a scalar loss.
inline Tensor probe_weights(const std::vector<int>& shape, unsigned seed) {
  Tensor t(shape);
  unsigned s = seed * 2654435761u + 12345u;
  for (auto& v : t.storage()) {
    s = s * 1664525u + 1013904223u;
    v = (static_cast<double>(s >> 8) / static_cast<double>(1u << 24)) * 2.0 - 1.0;
  }
  return t;
}

}  // namespace fgan::testing
