#include "fgan/gan/networks.hpp"

#include <json.hpp>

namespace fgan::gan {

std::vector<int> domain_ids(const std::vector<DomainLabel>& c) {
  std::vector<int> ids;
  ids.reserve(c.size());
  for (auto d : c) ids.push_back(static_cast<int>(d));
  return ids;
}

GanConfig GanConfig::tiny_preset() {
  GanConfig cfg;
  cfg.generator.channels = {8, 16, 32, 64};
  cfg.generator.z_dim = 16;
  cfg.generator.embed_dim = 8;
  cfg.discriminator.channels = {8, 16, 32, 64};
  return cfg;
}

std::string GanConfig::to_json() const {
  nlohmann::json j = {
      {"generator",
       {{"channels", generator.channels},
        {"z_dim", generator.z_dim},
        {"embed_dim", generator.embed_dim},
        {"attention_block", generator.attention_block},
        {"spectral_norm", generator.spectral_norm}}},
      {"discriminator",
       {{"channels", discriminator.channels},
        {"attention_block", discriminator.attention_block},
        {"spectral_norm", discriminator.spectral_norm}}},
  };
  return j.dump();
}

GanConfig GanConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    GanConfig cfg;
    const auto& g = j.at("generator");
    cfg.generator.channels = g.at("channels").get<std::vector<int>>();
    cfg.generator.z_dim = g.at("z_dim");
    cfg.generator.embed_dim = g.at("embed_dim");
    cfg.generator.attention_block = g.at("attention_block");
    cfg.generator.spectral_norm = g.at("spectral_norm");
    const auto& d = j.at("discriminator");
    cfg.discriminator.channels = d.at("channels").get<std::vector<int>>();
    cfg.discriminator.attention_block = d.at("attention_block");
    cfg.discriminator.spectral_norm = d.at("spectral_norm");
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid GAN configuration: ") + e.what());
  }
}

namespace {

void check_channels(const std::vector<int>& ch, int attention_block) {
  if (ch.size() != 4) throw ConfigError("exactly four residual blocks are supported");
  for (int c : ch)
    if (c < 1) throw ConfigError("channel counts must be positive");
  if (attention_block < 1 || attention_block > 4) throw ConfigError("attention block must be in 1..4");
}

void check_spatial(const Var& x, const char* who) {
  if (x.value().rank() != 4 || x.dim(1) != 1)
    throw ShapeMismatch(std::string(who) + " expects [N,1,H,W], got " + x.value().shape_string());
  if (x.dim(2) % 16 != 0 || x.dim(3) % 16 != 0)
    throw NonDivisibleSpatialDims(std::string(who) + " input " + std::to_string(x.dim(2)) + "x" + std::to_string(x.dim(3)) +
                                  " is not divisible by 16");
}

class EncoderBlock : public Module {
 public:
  EncoderBlock(int in, int out, bool preactivate, Rng& rng)
      : pre_(preactivate), c1_(in, out, 3, 1, 1, true, rng), c2_(out, out, 3, 1, 1, true, rng),
        sc_(in, out, 1, 1, 0, true, rng) {
    register_module("conv1", &c1_);
    register_module("conv2", &c2_);
    register_module("shortcut", &sc_);
  }
  Var forward(const Var& x) const {
    const Var in = pre_ ? ops::relu(x) : x;
    Var h = ops::avg_pool2(ops::relu(c1_.forward(in)));
    h = c2_.forward(h);
    return ops::add(h, ops::avg_pool2(sc_.forward(x)));
  }

 private:
  bool pre_;
  Conv2d c1_, c2_, sc_;
};

class DecoderBlock : public Module {
 public:
  DecoderBlock(int in, int out, int cond_dim, Rng& rng)
      : bn1_(in, cond_dim, rng), c1_(in, out, 3, 1, 1, true, rng), bn2_(out, cond_dim, rng),
        c2_(out, out, 3, 1, 1, true, rng), sc_(in, out, 1, 1, 0, true, rng) {
    register_module("cbn1", &bn1_);
    register_module("conv1", &c1_);
    register_module("cbn2", &bn2_);
    register_module("conv2", &c2_);
    register_module("shortcut", &sc_);
  }
  Var forward(const Var& x, const Var& cond) const {
    Var h = ops::upsample_nearest2(ops::relu(bn1_.forward(x, cond)));
    h = c1_.forward(h);
    h = c2_.forward(ops::relu(bn2_.forward(h, cond)));
    return ops::add(h, sc_.forward(ops::upsample_nearest2(x)));
  }

 private:
  ConditionalBatchNorm2d bn1_;
  Conv2d c1_;
  ConditionalBatchNorm2d bn2_;
  Conv2d c2_, sc_;
};

class DiscriminatorBlock : public Module {
 public:
  DiscriminatorBlock(int in, int out, bool first, bool sn, Rng& rng)
      : first_(first), c1_(in, out, 3, 1, 1, true, rng, sn), c2_(out, out, 3, 1, 1, true, rng, sn),
        sc_(in, out, 1, 1, 0, true, rng, sn) {
    register_module("conv1", &c1_);
    register_module("conv2", &c2_);
    register_module("shortcut", &sc_);
  }
  Var forward(const Var& x) const {
    const Var in = first_ ? x : ops::relu(x);
    const Var h = ops::avg_pool2(c2_.forward(ops::relu(c1_.forward(in))));
    const Var s = first_ ? sc_.forward(ops::avg_pool2(x)) : ops::avg_pool2(sc_.forward(x));
    return ops::add(h, s);
  }

 private:
  bool first_;
  Conv2d c1_, c2_, sc_;
};

}  // namespace

struct Generator::Impl {
  Impl(const GeneratorConfig& cfg, Rng& rng)
      : embed(kNumDomains, cfg.embed_dim, rng, 0.02),
        attention(decoder_out(cfg, cfg.attention_block - 1), rng, cfg.spectral_norm),
        head_bn(cfg.channels[0]),
        head_conv(cfg.channels[0], 1, 3, 1, 1, true, rng) {
    const auto& ch = cfg.channels;
    const int cond = cfg.z_dim + cfg.embed_dim;
    for (int k = 0; k < 4; ++k) encoder.push_back(std::make_unique<EncoderBlock>(k == 0 ? 1 : ch[k - 1], ch[k], k > 0, rng));
    for (int k = 0; k < 4; ++k)
      decoder.push_back(std::make_unique<DecoderBlock>(k == 0 ? ch[3] : decoder_out(cfg, k - 1), decoder_out(cfg, k), cond, rng));
  }
  // Decoder block k outputs the channel count of encoder block 2-k (the last two share channels[0]).
  static int decoder_out(const GeneratorConfig& cfg, int k) { return cfg.channels[std::max(0, 2 - k)]; }

  Embedding embed;
  std::vector<std::unique_ptr<EncoderBlock>> encoder;
  std::vector<std::unique_ptr<DecoderBlock>> decoder;
  SelfAttention attention;
  BatchNorm2d head_bn;
  Conv2d head_conv;
};

Generator::Generator(const GeneratorConfig& cfg, Rng& rng) : cfg_(cfg) {
  check_channels(cfg.channels, cfg.attention_block);
  if (cfg.z_dim < 1 || cfg.embed_dim < 1) throw ConfigError("z_dim and embed_dim must be positive");
  impl_ = std::make_unique<Impl>(cfg, rng);
  register_module("embed", &impl_->embed);
  for (int k = 0; k < 4; ++k) register_module("enc" + std::to_string(k + 1), impl_->encoder[k].get());
  for (int k = 0; k < 4; ++k) register_module("dec" + std::to_string(k + 1), impl_->decoder[k].get());
  register_module("attention", &impl_->attention);
  register_module("head_bn", &impl_->head_bn);
  register_module("head_conv", &impl_->head_conv);
}

Generator::~Generator() = default;

const SelfAttention& Generator::attention() const { return impl_->attention; }

Var Generator::condition(const Var& z, const std::vector<DomainLabel>& c) const {
  if (z.value().rank() != 2 || z.dim(1) != cfg_.z_dim || z.dim(0) != static_cast<int>(c.size()))
    throw ShapeMismatch("latent batch " + z.value().shape_string() + " does not match " + std::to_string(c.size()) +
                        " conditions of dimension " + std::to_string(cfg_.z_dim));
  return ops::concat1({z, impl_->embed.forward(domain_ids(c))});
}

Var Generator::forward(const Var& x, const Var& z, const std::vector<DomainLabel>& c) const {
  check_spatial(x, "generator");
  if (x.dim(0) != static_cast<int>(c.size())) throw ShapeMismatch("image batch and condition batch differ in size");
  const Var cond = condition(z, c);
  Var h = x;
  for (const auto& block : impl_->encoder) h = block->forward(h);
  for (int k = 0; k < 4; ++k) {
    h = impl_->decoder[k]->forward(h, cond);
    if (k + 1 == cfg_.attention_block) h = impl_->attention.forward(h);
  }
  h = impl_->head_conv.forward(ops::relu(impl_->head_bn.forward(h)));
  return ops::sigmoid(h);
}

struct Discriminator::Impl {
  Impl(const DiscriminatorConfig& cfg, Rng& rng)
      : attention(cfg.channels[cfg.attention_block - 1], rng, cfg.spectral_norm),
        psi(cfg.channels[3], 1, true, rng, cfg.spectral_norm),
        embed(kNumDomains, cfg.channels[3], rng, 0.02) {
    for (int k = 0; k < 4; ++k)
      blocks.push_back(std::make_unique<DiscriminatorBlock>(k == 0 ? 1 : cfg.channels[k - 1], cfg.channels[k], k == 0,
                                                            cfg.spectral_norm, rng));
  }
  std::vector<std::unique_ptr<DiscriminatorBlock>> blocks;
  SelfAttention attention;
  Linear psi;
  Embedding embed;
};

Discriminator::Discriminator(const DiscriminatorConfig& cfg, Rng& rng) : cfg_(cfg) {
  check_channels(cfg.channels, cfg.attention_block);
  impl_ = std::make_unique<Impl>(cfg, rng);
  for (int k = 0; k < 4; ++k) register_module("block" + std::to_string(k + 1), impl_->blocks[k].get());
  register_module("attention", &impl_->attention);
  register_module("psi", &impl_->psi);
  register_module("embed", &impl_->embed);
}

Discriminator::~Discriminator() = default;

const Embedding& Discriminator::class_embedding() const { return impl_->embed; }
const SelfAttention& Discriminator::attention() const { return impl_->attention; }

Var Discriminator::features(const Var& y) const {
  check_spatial(y, "discriminator");
  Var h = y;
  for (int k = 0; k < 4; ++k) {
    h = impl_->blocks[k]->forward(h);
    if (k + 1 == cfg_.attention_block) h = impl_->attention.forward(h);
  }
  return ops::global_sum_pool(ops::relu(h));
}

Var Discriminator::score_from_features(const Var& phi, const std::vector<DomainLabel>& c) const {
  if (phi.dim(0) != static_cast<int>(c.size())) throw ShapeMismatch("feature batch and condition batch differ in size");
  const Var linear = ops::reshape(impl_->psi.forward(phi), {phi.dim(0)});
  return ops::add(linear, ops::row_dot(impl_->embed.forward(domain_ids(c)), phi));
}

Var Discriminator::forward(const Var& y, const std::vector<DomainLabel>& c) const {
  return score_from_features(features(y), c);
}

}  // namespace fgan::gan
