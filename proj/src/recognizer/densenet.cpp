#include "fgan/recognizer/densenet.hpp"

#include <string>

namespace fgan::recognizer {

void DenseNetConfig::validate() const {
  if (num_blocks < 1) throw ConfigError("densenet: num_blocks must be >= 1");
  if (layers_per_block < 1) throw ConfigError("densenet: layers_per_block must be >= 1");
  if (growth_rate < 1) throw ConfigError("densenet: growth_rate must be >= 1");
  if (multiscale && num_blocks < 2) throw ConfigError("densenet: multiscale needs at least two blocks");
}

DenseLayer::DenseLayer(int in_channels, int growth, Rng& rng) : bn_(in_channels), conv_(in_channels, growth, 3, 1, 1, false, rng) {
  register_module("bn", &bn_);
  register_module("conv", &conv_);
}

Var DenseLayer::forward(const Var& x) const { return conv_.forward(ops::relu(bn_.forward(x))); }

DenseBlock::DenseBlock(const DenseBlockPlan& plan, Rng& rng) : plan_(plan) {
  for (int i = 0; i < plan.layers; ++i) {
    layers_.push_back(std::make_unique<DenseLayer>(plan.layer_input(i), plan.growth, rng));
    register_module("layer" + std::to_string(i + 1), layers_.back().get());
  }
}

Var DenseBlock::forward(const Var& x) const {
  std::vector<Var> pieces{x};
  Var current = x;
  for (const auto& layer : layers_) {
    pieces.push_back(layer->forward(current));
    current = ops::concat1(pieces);
  }
  return current;
}

Transition::Transition(int in_channels, bool pool, Rng& rng)
    : bn_(in_channels), conv_(in_channels, std::max(1, in_channels / 2), 1, 1, 0, false, rng), pool_(pool) {
  register_module("bn", &bn_);
  register_module("conv", &conv_);
}

std::pair<Var, Var> Transition::forward_both(const Var& x) const {
  Var y = conv_.forward(ops::relu(bn_.forward(x)));
  return {y, pool_ ? ops::avg_pool2(y) : y};
}

struct DenseNetEncoder::Impl {
  std::unique_ptr<Conv2d> stem;
  std::vector<std::unique_ptr<DenseBlock>> blocks;
  std::vector<std::unique_ptr<Transition>> transitions;
  std::unique_ptr<BatchNorm2d> head_bn;
  std::unique_ptr<DenseBlock> fine_block;
  std::unique_ptr<BatchNorm2d> fine_bn;
};

DenseNetEncoder::DenseNetEncoder(const DenseNetConfig& cfg, Rng& rng) : cfg_(cfg), impl_(std::make_unique<Impl>()) {
  cfg.validate();
  const int k = cfg.growth_rate, D = cfg.layers_per_block;
  impl_->stem = std::make_unique<Conv2d>(1, 2 * k, 7, 2, 3, false, rng);
  register_module("stem", impl_->stem.get());
  int channels = 2 * k;
  for (int b = 0; b < cfg.num_blocks; ++b) {
    impl_->blocks.push_back(std::make_unique<DenseBlock>(DenseBlockPlan{channels, D, k}, rng));
    register_module("block" + std::to_string(b + 1), impl_->blocks.back().get());
    channels = impl_->blocks.back()->plan().output_channels();
    if (b + 1 < cfg.num_blocks) {
      const bool last = b + 2 == cfg.num_blocks;
      const bool pool = b == 0 || (cfg.multiscale && last);
      impl_->transitions.push_back(std::make_unique<Transition>(channels, pool, rng));
      register_module("transition" + std::to_string(b + 1), impl_->transitions.back().get());
      const int t_out = impl_->transitions.back()->out_channels();
      if (cfg.multiscale && last) {
        impl_->fine_block = std::make_unique<DenseBlock>(DenseBlockPlan{t_out, std::max(1, D / 2), k}, rng);
        register_module("fine_block", impl_->fine_block.get());
        impl_->fine_bn = std::make_unique<BatchNorm2d>(impl_->fine_block->plan().output_channels());
        register_module("fine_bn", impl_->fine_bn.get());
      }
      channels = t_out;
    }
  }
  impl_->head_bn = std::make_unique<BatchNorm2d>(channels);
  register_module("head_bn", impl_->head_bn.get());
}

DenseNetEncoder::~DenseNetEncoder() = default;

const DenseBlock& DenseNetEncoder::block(int b) const { return *impl_->blocks.at(b); }
const Transition& DenseNetEncoder::transition(int b) const { return *impl_->transitions.at(b); }

std::vector<int> DenseNetEncoder::output_channels() const {
  std::vector<int> out{impl_->blocks.back()->plan().output_channels()};
  if (impl_->fine_block) out.push_back(impl_->fine_block->plan().output_channels());
  return out;
}

std::vector<std::pair<int, int>> DenseNetEncoder::output_sizes(int height, int width) const {
  auto fail = [&] {
    throw ImageTooSmall("a " + std::to_string(height) + "x" + std::to_string(width) +
                        " image collapses to nothing inside the encoder");
  };
  if (height < 1 || width < 1) fail();
  int h = (height - 1) / 2 + 1, w = (width - 1) / 2 + 1;  // stem: 7x7, stride 2, pad 3
  h /= 2;
  w /= 2;
  if (h < 1 || w < 1) fail();
  std::pair<int, int> fine{0, 0};
  for (const auto& t : impl_->transitions) {
    if (!t->pools()) continue;
    if (impl_->fine_block && t.get() == impl_->transitions.back().get()) fine = {h, w};
    h /= 2;
    w /= 2;
    if (h < 1 || w < 1) fail();
  }
  std::vector<std::pair<int, int>> out{{h, w}};
  if (impl_->fine_block) out.push_back(fine);
  return out;
}

std::vector<Var> DenseNetEncoder::forward(const Var& images) const {
  if (images.shape().size() != 4 || images.dim(1) != 1)
    throw ShapeMismatch("encoder expects [N,1,H,W], got " + images.value().shape_string());
  output_sizes(images.dim(2), images.dim(3));
  Var x = ops::max_pool2(impl_->stem->forward(images));
  Var fine;
  for (std::size_t b = 0; b < impl_->blocks.size(); ++b) {
    x = impl_->blocks[b]->forward(x);
    if (b < impl_->transitions.size()) {
      auto [unpooled, pooled] = impl_->transitions[b]->forward_both(x);
      if (impl_->fine_block && b + 1 == impl_->transitions.size())
        fine = ops::relu(impl_->fine_bn->forward(impl_->fine_block->forward(unpooled)));
      x = pooled;
    }
  }
  std::vector<Var> out{ops::relu(impl_->head_bn->forward(x))};
  if (fine) out.push_back(fine);
  return out;
}

}  // namespace fgan::recognizer
