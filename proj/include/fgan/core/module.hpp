#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fgan/core/autograd.hpp"

namespace fgan {

using NamedParameter = std::pair<std::string, Var>;
using NamedBuffer = std::pair<std::string, Tensor*>;

/// Owner of parameters, persistent buffers, and child modules. Modules are pinned in memory
/// (non-copyable, non-movable) because parents keep raw pointers to their children.
class Module {
 public:
  Module() = default;
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;
  Module(Module&&) = delete;
  Module& operator=(Module&&) = delete;

  std::vector<NamedParameter> named_parameters() const;
  std::vector<Var> parameters() const;
  std::vector<NamedBuffer> named_buffers() const;

  void set_training(bool training);
  bool training() const { return training_; }

  /// Clears accumulated gradients of every parameter.
  void zero_grad() const;

  /// Calls fn on this module and then on every descendant, depth first.
  void apply(const std::function<void(Module&)>& fn);

 protected:
  Var register_parameter(std::string name, Tensor init);
  void register_buffer(std::string name, Tensor* buffer);
  void register_module(std::string name, Module* child);

 private:
  void collect(const std::string& prefix, std::vector<NamedParameter>* params, std::vector<NamedBuffer>* buffers) const;

  std::vector<NamedParameter> params_;
  std::vector<NamedBuffer> buffers_;
  std::vector<std::pair<std::string, Module*>> children_;
  bool training_ = true;
};

/// Content hash over parameter values; used to prove that a phase left parameters untouched.
std::uint64_t parameter_hash(const Module& m);

}  // namespace fgan
