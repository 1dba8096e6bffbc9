#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fgan/core/error.hpp"
#include "fgan/corpus/record.hpp"

namespace fgan::trainer {

enum class NormalizeMode { Height128, SymbolHeight };

const char* normalize_mode_name(NormalizeMode m);
NormalizeMode parse_normalize_mode(const std::string& name);

struct GANTrainConfig {
  double lr_d = 2e-4;
  double lr_g = 5e-5;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double lambda = 1.0;
  bool bidirectional = true;
  bool swap_target = false;        // target domain drawn uniformly, may equal the source
  bool handwritten_source = true;  // false: generator inputs are rendered images only
  bool task_sees_real = true;      // task model also trains on real images of both domains
  bool augment = true;
  int max_iterations = 1000;
  int batch_size = 4;
  int input_height = 128;
  int max_width = 512;
  int max_tokens = 50;
  std::string model_preset = "default";  // default | tiny
  std::string task_preset = "small";     // small | compact
  int checkpoint_every = 0;              // 0: final checkpoint only
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthesisConfig {
  std::size_t max_pixel_area = 640000;
  bool sample_fonts = true;
  int height = 128;
  DomainLabel target = DomainLabel::Handwritten;
  std::filesystem::path output_dir = "synth";
  std::uint64_t seed = 0;

  void validate() const;
};

struct RecTrainConfig {
  int batch_size = 6;
  double lr = 1e-4;
  double momentum = 0.9;
  double lr_decay_factor = 10.0;
  int plateau_patience = 3;
  NormalizeMode normalize_mode = NormalizeMode::Height128;
  int symbol_height = 32;
  int max_width = 0;           // 0: no width limit
  int max_steps = 10000;
  int steps_per_epoch = 0;     // 0: one pass over the largest source
  double target_exprate = 101; // stop once validation ExpRate reaches this
  double clip_norm = 0;        // 0: no clipping
  int bn_batches = 32;         // training batches averaged into BN statistics before validation; 0: off
  std::string preset = "large";  // small | large | compact
  std::uint64_t seed = 0;

  void validate() const;
};

// JSON objects with exactly the field names above. Unknown keys raise ConfigError;
// missing keys keep their defaults.
std::string to_json(const GANTrainConfig& c);
std::string to_json(const SynthesisConfig& c);
std::string to_json(const RecTrainConfig& c);
void merge_json(GANTrainConfig& c, const std::string& text);
void merge_json(SynthesisConfig& c, const std::string& text);
void merge_json(RecTrainConfig& c, const std::string& text);

/// Writes `config.resolved` (pretty JSON) into dir.
void write_resolved(const std::filesystem::path& dir, const std::string& json);

}  // namespace fgan::trainer
