#include "fgan/core/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fgan/core/error.hpp"

namespace fgan {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeMismatch("negative dimension in " + shape_to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, Real fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, const std::vector<Real>& data)
    : Tensor(std::move(shape), RealBuffer(data.begin(), data.end())) {}

Tensor::Tensor(std::vector<int> shape, RealBuffer data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_))
    throw ShapeMismatch("data size " + std::to_string(data_.size()) + " does not match shape " +
                        shape_to_string(shape_));
}

int Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) throw ShapeMismatch("axis out of range for " + shape_string());
  return shape_[axis];
}

Real& Tensor::at(int n, int c, int h, int w) {
  return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

Real Tensor::at(int n, int c, int h, int w) const {
  return data_[((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
}

void Tensor::fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(std::vector<int> shape) {
  if (shape_numel(shape) != data_.size())
    throw ShapeMismatch("cannot reshape " + shape_string() + " to " + shape_to_string(shape));
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  Tensor t = *this;
  t.reshape(std::move(shape));
  return t;
}

Real Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), Real{0}); }

Real Tensor::max_abs() const {
  Real m = 0;
  for (Real v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::string Tensor::shape_string() const { return shape_to_string(shape_); }

}  // namespace fgan
