#include "fgan/core/autograd.hpp"

#include <unordered_set>

#include "fgan/core/error.hpp"

namespace fgan {

namespace {
thread_local bool g_grad_enabled = true;
}

const Tensor& Var::value() const { return node_->value; }
Tensor& Var::mutable_value() { return node_->value; }
const Tensor& Var::grad() const { return node_->grad; }
Tensor& Var::mutable_grad() { return node_->grad_buffer(); }
bool Var::has_grad() const { return node_ && !node_->grad.empty(); }
bool Var::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Node::grad_buffer() {
  if (grad.size() != value.size() || grad.shape() != value.shape()) grad = Tensor(value.shape());
  return grad;
}

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Var(std::move(n));
}

Var parameter(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Var(std::move(n));
}

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    for (const auto& p : parents) {
      if (p.requires_grad()) {
        n->requires_grad = true;
        break;
      }
    }
  }
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return Var(std::move(n));
}

void accumulate_grad(const Var& parent, const Tensor& g) {
  if (!parent.requires_grad()) return;
  Tensor& dst = parent.node()->grad_buffer();
  if (dst.size() != g.size()) throw ShapeMismatch("gradient size mismatch in accumulate_grad");
  Real* d = dst.data();
  const Real* s = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) d[i] += s[i];
}

void backward(const Var& root) {
  if (!root.requires_grad()) return;
  if (root.value().size() != 1) throw ShapeMismatch("backward() needs a scalar root, got " + root.value().shape_string());

  // Iterative post-order DFS; the reverse of the post-order is a valid topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].node();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) {
      n->grad_buffer();
      n->backward(*n);
    }
  }
  for (Node* n : order) {
    if (n->backward) {
      n->backward = nullptr;
      n->parents.clear();
    }
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace fgan
