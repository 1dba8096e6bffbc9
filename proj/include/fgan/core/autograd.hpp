#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fgan/core/tensor.hpp"

namespace fgan {

struct Node;

/// Handle to a node of the reverse-mode graph. Cheap to copy; copies alias the same node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const;
  Tensor& mutable_value();
  const Tensor& grad() const;
  Tensor& mutable_grad();
  bool has_grad() const;
  bool requires_grad() const;
  const std::vector<int>& shape() const { return value().shape(); }
  int dim(int axis) const { return value().dim(axis); }
  Real item() const { return value()[0]; }

  Node* node() const { return node_.get(); }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward;

  /// Zero-initialized gradient buffer of the same shape as value.
  Tensor& grad_buffer();
};

/// Leaf that never receives a gradient.
Var constant(Tensor value);
/// Leaf whose gradient is accumulated by backward().
Var parameter(Tensor value);

/// Builds an interior node. The backward closure is dropped when no parent needs a gradient
/// or when gradient recording is disabled.
Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

/// Reverse sweep from a scalar output. Interior nodes release their closures afterwards.
void backward(const Var& root);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Adds g into the parent's gradient when that parent participates in differentiation.
void accumulate_grad(const Var& parent, const Tensor& g);

}  // namespace fgan
