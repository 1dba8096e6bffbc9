#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace fgan {

using Real = double;

/// Cache-line aligned allocation. Vectorized reductions peel a prefix that depends on the
/// address of their first element, so a fixed alignment keeps results bitwise reproducible.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using RealBuffer = std::vector<Real, AlignedAllocator<Real>>;

/// Dense row-major array of reals with a dynamic shape (at most 4 axes in practice, NCHW).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, Real fill = 0.0);
  Tensor(std::vector<int> shape, const std::vector<Real>& data);
  Tensor(std::vector<int> shape, RealBuffer data);

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }
  static Tensor scalar(Real v) { return Tensor({1}, RealBuffer{v}); }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int axis) const;
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  RealBuffer& storage() { return data_; }
  const RealBuffer& storage() const { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  Real& at(int n, int c, int h, int w);
  Real at(int n, int c, int h, int w) const;

  void fill(Real v);
  void reshape(std::vector<int> shape);
  Tensor reshaped(std::vector<int> shape) const;

  Real sum() const;
  Real max_abs() const;

  std::string shape_string() const;

 private:
  std::vector<int> shape_;
  RealBuffer data_;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

}  // namespace fgan
