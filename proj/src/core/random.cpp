#include "fgan/core/random.hpp"

namespace fgan {

Tensor Rng::normal_tensor(std::vector<int> shape, double stddev) {
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = normal(0.0, stddev);
  return t;
}

Tensor Rng::uniform_tensor(std::vector<int> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = uniform(lo, hi);
  return t;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  // FNV-1a over the key, then mixed with the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h ^ mix64(seed));
}

}  // namespace fgan
