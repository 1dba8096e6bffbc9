#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "fgan/core/tensor.hpp"

namespace fgan {

/// Seeded pseudo-random source. Every stochastic component owns one; nothing reads global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  /// Integer in the closed range [lo, hi].
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next_u64() { return engine_(); }

  Tensor normal_tensor(std::vector<int> shape, double stddev = 1.0);
  Tensor uniform_tensor(std::vector<int> shape, double lo, double hi);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);
/// Order-independent per-record seed: hash of the pipeline seed and a record id.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

}  // namespace fgan
