#include "doctest.h"
#include "fgan/recognizer/densenet.hpp"

using namespace fgan;
using namespace fgan::recognizer;

namespace {

Var images(Rng& rng, int n, int h, int w) { return constant(rng.uniform_tensor({n, 1, h, w}, 0.0, 1.0)); }

// Channel arithmetic written out independently of DenseBlockPlan: stem 2k, each block adds
// D*k, each transition halves (integer division).
int expected_main_channels(const DenseNetConfig& c) {
  int ch = 2 * c.growth_rate;
  for (int b = 0; b < c.num_blocks; ++b) {
    ch += c.layers_per_block * c.growth_rate;
    if (b + 1 < c.num_blocks) ch /= 2;
  }
  return ch;
}

}  // namespace

TEST_CASE("small encoder maps 128x128 to a 16x16 grid") {
  Rng rng(1);
  DenseNetEncoder enc(DenseNetConfig::small_preset(), rng);
  enc.set_training(false);
  CHECK(enc.output_channels() == std::vector<int>{expected_main_channels(DenseNetConfig::small_preset())});
  CHECK(enc.output_channels().front() == 264);
  CHECK(enc.output_sizes(128, 128) == std::vector<std::pair<int, int>>{{16, 16}});
  NoGradGuard guard;
  const auto out = enc.forward(images(rng, 1, 128, 128));
  REQUIRE(out.size() == 1);
  CHECK(out[0].shape() == std::vector<int>{1, 264, 16, 16});
}

TEST_CASE("channel count grows by D*k per block and halves at transitions") {
  Rng rng(2);
  for (DenseNetConfig cfg : {DenseNetConfig{2, 3, 4, false}, DenseNetConfig{3, 2, 5, false}, DenseNetConfig{4, 1, 6, false}}) {
    DenseNetEncoder enc(cfg, rng);
    int ch = 2 * cfg.growth_rate;
    for (int b = 0; b < cfg.num_blocks; ++b) {
      CHECK(enc.block(b).plan().input_channels == ch);
      CHECK(enc.block(b).plan().output_channels() == ch + cfg.layers_per_block * cfg.growth_rate);
      ch = enc.block(b).plan().output_channels();
      if (b + 1 < cfg.num_blocks) ch = enc.transition(b).out_channels();
    }
    CHECK(enc.output_channels().front() == expected_main_channels(cfg));
  }
}

TEST_CASE("encoder is fully convolutional: doubling the width doubles the feature width") {
  Rng rng(3);
  DenseNetEncoder enc(DenseNetConfig{3, 2, 4, false}, rng);
  enc.set_training(false);
  NoGradGuard guard;
  const auto a = enc.forward(images(rng, 1, 32, 64)).front();
  const auto b = enc.forward(images(rng, 1, 32, 128)).front();
  CHECK(a.dim(2) == 4);
  CHECK(a.dim(3) == 8);
  CHECK(b.dim(2) == 4);
  CHECK(b.dim(3) == 16);
}

TEST_CASE("eval-mode batch of two equals the concatenated singletons") {
  Rng rng(4);
  DenseNetEncoder enc(DenseNetConfig{3, 2, 4, true}, rng);
  const Var x = images(rng, 2, 32, 48);
  enc.forward(x);  // move running statistics off their defaults
  enc.set_training(false);
  const auto both = enc.forward(x);
  for (int n = 0; n < 2; ++n) {
    Tensor one({1, 1, 32, 48});
    std::copy_n(x.value().data() + n * 32 * 48, 32 * 48, one.data());
    const auto single = enc.forward(constant(one));
    for (std::size_t s = 0; s < both.size(); ++s) {
      const std::size_t per = single[s].value().size();
      for (std::size_t i = 0; i < per; ++i)
        CHECK(single[s].value()[i] == doctest::Approx(both[s].value()[n * per + i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("multiscale encoder adds a finer stride-8 scale") {
  Rng rng(5);
  const DenseNetConfig cfg{3, 4, 4, true};
  DenseNetEncoder enc(cfg, rng);
  CHECK(enc.output_sizes(64, 96) == std::vector<std::pair<int, int>>{{4, 6}, {8, 12}});
  const auto ch = enc.output_channels();
  REQUIRE(ch.size() == 2);
  CHECK(ch[1] == enc.transition(1).out_channels() + (cfg.layers_per_block / 2) * cfg.growth_rate);
  enc.set_training(false);
  NoGradGuard guard;
  const auto out = enc.forward(images(rng, 1, 64, 96));
  REQUIRE(out.size() == 2);
  CHECK(out[0].shape() == std::vector<int>{1, ch[0], 4, 6});
  CHECK(out[1].shape() == std::vector<int>{1, ch[1], 8, 12});
}

TEST_CASE("images that collapse inside the encoder are rejected") {
  Rng rng(6);
  DenseNetEncoder enc(DenseNetConfig::small_preset(), rng);
  CHECK_THROWS_AS(enc.output_sizes(4, 100), ImageTooSmall);
  CHECK_THROWS_AS(enc.forward(images(rng, 1, 6, 64)), ImageTooSmall);
  CHECK_NOTHROW(enc.output_sizes(8, 8));
  DenseNetEncoder ms(DenseNetConfig::large_preset(), rng);
  CHECK_THROWS_AS(ms.output_sizes(8, 64), ImageTooSmall);
  CHECK_NOTHROW(ms.output_sizes(16, 16));
  CHECK_THROWS_AS(DenseNetConfig({0, 6, 24, false}).validate(), ConfigError);
}

TEST_CASE("dense connectivity: every layer reads every earlier output") {
  Rng rng(7);
  const DenseBlockPlan plan{5, 4, 3};
  DenseBlock block(plan, rng);
  for (int i = 0; i < plan.layers; ++i) {
    const Tensor& w = block.layer(i).conv().weight().value();  // [growth, in, 3, 3]
    REQUIRE(w.dim(1) == plan.layer_input(i));
    // Channel groups of the input: the block input, then each earlier layer's output.
    std::vector<std::pair<int, int>> groups{{0, plan.input_channels}};
    for (int j = 0; j < i; ++j) groups.push_back({plan.input_channels + j * plan.growth, plan.growth});
    for (auto [start, count] : groups) {
      double norm = 0;
      for (int o = 0; o < w.dim(0); ++o)
        for (int c = start; c < start + count; ++c)
          for (int k = 0; k < 9; ++k) norm += std::abs(w[(static_cast<std::size_t>(o) * w.dim(1) + c) * 9 + k]);
      CHECK(norm > 0);
    }
  }
  // Functionally: zeroing the first layer's weights changes what the last layer sees.
  const Var x = constant(rng.normal_tensor({1, 5, 4, 4}));
  block.set_training(false);
  const Tensor before = block.forward(x).value();
  Var w0 = block.layer(0).conv().weight();
  w0.mutable_value().fill(0.0);
  const Tensor after = block.forward(x).value();
  const std::size_t last_start = static_cast<std::size_t>(plan.layer_input(plan.layers - 1)) * 16;
  double diff = 0;
  for (std::size_t i = last_start; i < before.size(); ++i) diff += std::abs(before[i] - after[i]);
  CHECK(diff > 0);
}
