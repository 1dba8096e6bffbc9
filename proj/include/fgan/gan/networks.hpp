#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fgan/core/layers.hpp"
#include "fgan/corpus/record.hpp"
#include "fgan/gan/attention.hpp"

namespace fgan::gan {

FGAN_DEFINE_ERROR(NonDivisibleSpatialDims);

struct GeneratorConfig {
  std::vector<int> channels{32, 64, 128, 256};  // encoder block outputs; the decoder mirrors them
  int z_dim = 128;
  int embed_dim = 16;
  int attention_block = 2;  // self-attention follows this decoder block (1-based)
  bool spectral_norm = false;
};

struct DiscriminatorConfig {
  std::vector<int> channels{32, 64, 128, 256};
  int attention_block = 2;
  bool spectral_norm = true;
};

struct GanConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;

  static GanConfig default_preset() { return {}; }
  /// Narrow channels and a small latent code for smoke runs on one CPU core.
  static GanConfig tiny_preset();
  /// Canonical JSON echo, stored in checkpoints and compared on load.
  std::string to_json() const;
  static GanConfig from_json(const std::string& text);
};

/// Encoder-decoder generator. Encoder blocks halve H and W, decoder blocks double them back;
/// the decoder's batch norms are conditioned on concat(z, embed(c)).
class Generator : public Module {
 public:
  Generator(const GeneratorConfig& cfg, Rng& rng);
  ~Generator() override;

  /// x[N,1,H,W] in [0,1], z[N,z_dim], one target domain per sample -> [N,1,H,W] in (0,1).
  Var forward(const Var& x, const Var& z, const std::vector<DomainLabel>& c) const;
  /// Conditioning vectors [N, z_dim + embed_dim].
  Var condition(const Var& z, const std::vector<DomainLabel>& c) const;

  const GeneratorConfig& config() const { return cfg_; }
  const SelfAttention& attention() const;

 private:
  struct Impl;
  GeneratorConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

/// Residual discriminator with a projection head:
///   score(y, c) = psi(phi(y)) + <e_c, phi(y)>,
/// where phi is the ReLU'd final feature map summed over space.
class Discriminator : public Module {
 public:
  Discriminator(const DiscriminatorConfig& cfg, Rng& rng);
  ~Discriminator() override;

  Var forward(const Var& y, const std::vector<DomainLabel>& c) const;
  /// phi(y) [N, channels.back()].
  Var features(const Var& y) const;
  Var score_from_features(const Var& phi, const std::vector<DomainLabel>& c) const;

  const Embedding& class_embedding() const;
  const DiscriminatorConfig& config() const { return cfg_; }
  const SelfAttention& attention() const;

 private:
  struct Impl;
  DiscriminatorConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

std::vector<int> domain_ids(const std::vector<DomainLabel>& c);

}  // namespace fgan::gan
