#pragma once

#include <memory>
#include <vector>

#include "fgan/core/error.hpp"
#include "fgan/core/layers.hpp"

namespace fgan::recognizer {

FGAN_DEFINE_ERROR(ImageTooSmall);

struct DenseNetConfig {
  int num_blocks = 3;
  int layers_per_block = 6;  // D
  int growth_rate = 24;      // k
  bool multiscale = false;

  /// Three blocks of six layers with growth 24; single output scale.
  static DenseNetConfig small_preset() { return {}; }
  /// Deeper blocks plus a second, finer output scale.
  static DenseNetConfig large_preset() { return {3, 8, 24, true}; }
  void validate() const;
};

/// Channel bookkeeping of one dense block: layer i sees the block input plus the outputs of
/// layers 0..i-1, so its input width is input_channels + i * growth.
struct DenseBlockPlan {
  int input_channels = 0;
  int layers = 0;
  int growth = 0;

  int layer_input(int i) const { return input_channels + i * growth; }
  int output_channels() const { return input_channels + layers * growth; }
};

/// One dense layer: BN -> ReLU -> 3x3 convolution producing `growth` channels.
class DenseLayer : public Module {
 public:
  DenseLayer(int in_channels, int growth, Rng& rng);
  Var forward(const Var& x) const;
  const Conv2d& conv() const { return conv_; }

 private:
  BatchNorm2d bn_;
  Conv2d conv_;
};

class DenseBlock : public Module {
 public:
  DenseBlock(const DenseBlockPlan& plan, Rng& rng);
  /// Concatenation of the block input and every layer output along channels.
  Var forward(const Var& x) const;
  const DenseBlockPlan& plan() const { return plan_; }
  const DenseLayer& layer(int i) const { return *layers_[i]; }

 private:
  DenseBlockPlan plan_;
  std::vector<std::unique_ptr<DenseLayer>> layers_;
};

/// BN -> ReLU -> 1x1 convolution halving the channels, optionally followed by 2x2 average pooling.
class Transition : public Module {
 public:
  Transition(int in_channels, bool pool, Rng& rng);
  /// Output before pooling (the attachment point of the fine branch) and after.
  std::pair<Var, Var> forward_both(const Var& x) const;
  Var forward(const Var& x) const { return forward_both(x).second; }
  int out_channels() const { return conv_.out_channels(); }
  bool pools() const { return pool_; }

 private:
  BatchNorm2d bn_;
  Conv2d conv_;
  bool pool_;
};

/// Fully convolutional DenseNet encoder.
///
/// Layout: 7x7 stride-2 stem with 2k channels, 2x2 max pool, then dense blocks joined by
/// transitions. Only the first transition pools, so the main output has stride 8. In
/// multiscale mode the last transition also pools (main output at stride 16) and a second
/// dense block of D/2 layers grows from that transition's unpooled output, giving a stride-8
/// scale. Each output passes through a final BN -> ReLU.
class DenseNetEncoder : public Module {
 public:
  DenseNetEncoder(const DenseNetConfig& cfg, Rng& rng);
  ~DenseNetEncoder() override;

  /// images[N,1,H,W] -> one feature map per scale (main scale first).
  std::vector<Var> forward(const Var& images) const;

  /// Output channels per scale.
  std::vector<int> output_channels() const;
  /// Output spatial size per scale for an HxW input; throws ImageTooSmall if any stage collapses.
  std::vector<std::pair<int, int>> output_sizes(int height, int width) const;

  const DenseNetConfig& config() const { return cfg_; }
  const DenseBlock& block(int b) const;
  const Transition& transition(int b) const;

 private:
  struct Impl;
  DenseNetConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fgan::recognizer
