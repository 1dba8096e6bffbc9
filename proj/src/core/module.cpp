#include "fgan/core/module.hpp"

#include <cstring>

#include "fgan/core/random.hpp"

namespace fgan {

Var Module::register_parameter(std::string name, Tensor init) {
  Var p = parameter(std::move(init));
  params_.emplace_back(std::move(name), p);
  return p;
}

void Module::register_buffer(std::string name, Tensor* buffer) { buffers_.emplace_back(std::move(name), buffer); }

void Module::register_module(std::string name, Module* child) { children_.emplace_back(std::move(name), child); }

void Module::collect(const std::string& prefix, std::vector<NamedParameter>* params,
                     std::vector<NamedBuffer>* buffers) const {
  if (params)
    for (const auto& [name, p] : params_) params->emplace_back(prefix + name, p);
  if (buffers)
    for (const auto& [name, b] : buffers_) buffers->emplace_back(prefix + name, b);
  for (const auto& [name, child] : children_) child->collect(prefix + name + ".", params, buffers);
}

std::vector<NamedParameter> Module::named_parameters() const {
  std::vector<NamedParameter> out;
  collect("", &out, nullptr);
  return out;
}

std::vector<Var> Module::parameters() const {
  std::vector<Var> out;
  for (auto& [name, p] : named_parameters()) out.push_back(p);
  return out;
}

std::vector<NamedBuffer> Module::named_buffers() const {
  std::vector<NamedBuffer> out;
  collect("", nullptr, &out);
  return out;
}

void Module::set_training(bool training) {
  training_ = training;
  for (auto& [name, child] : children_) child->set_training(training);
}

void Module::apply(const std::function<void(Module&)>& fn) {
  fn(*this);
  for (auto& [name, child] : children_) child->apply(fn);
}

void Module::zero_grad() const {
  for (auto& p : parameters())
    if (p.has_grad()) p.node()->grad.fill(0);
}

std::uint64_t parameter_hash(const Module& m) {
  std::uint64_t h = 0x1234567;
  for (const auto& [name, p] : m.named_parameters()) {
    for (char c : name) h = mix64(h ^ static_cast<unsigned char>(c));
    for (Real v : p.value().values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
  }
  return h;
}

}  // namespace fgan
