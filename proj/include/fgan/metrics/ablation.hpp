#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "fgan/trainer/config.hpp"
#include "fgan/trainer/data.hpp"

namespace fgan::metrics {

struct AblationVariant {
  std::string name;
  trainer::GANTrainConfig gan;
};

/// Desk-scale version of the synthesize, train, measure protocol. For every variant the GAN is
/// trained once up to the largest requested iteration; at each requested iteration the
/// generator translates `train_records`, a fresh recognizer trains on the synthesized set and
/// its perplexity is measured on handwritten renderings of `heldout_records`.
struct AblationConfig {
  std::vector<AblationVariant> variants;
  std::vector<int> iterations;
  std::vector<corpus::FormulaRecord> train_records;
  std::vector<corpus::FormulaRecord> heldout_records;
  trainer::SynthesisConfig synthesis;
  trainer::RecTrainConfig recognizer;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AblationTable {
  std::vector<std::string> variants;
  std::vector<int> iterations;
  std::vector<std::vector<double>> perplexity;  // [variant][iteration]
  nlohmann::json metadata;                      // variant configurations and run settings
};

/// Desk-scale settings: tiny GAN at height 32 with the compact task model, synthesis at
/// height 32, compact recognizer on symbol-height-16 images. Variants, iterations, formulas
/// and out_dir are left for the caller.
AblationConfig desk_ablation_config(std::uint64_t seed = 0);

/// GAN settings used by the desk-scale harness: tiny preset, height 32, width limit 128,
/// batch size 2, compact task model.
trainer::GANTrainConfig desk_gan_config(std::uint64_t seed = 0);

/// One variant per lambda value, named "lambda=<value>", on top of `base`.
std::vector<AblationVariant> lambda_variants(const trainer::GANTrainConfig& base, const std::vector<double>& lambdas);

AblationTable ablation_run(const AblationConfig& cfg, const corpus::Vocabulary& vocab,
                           const image::RendererBackend& renderer);

/// ablation.json (table plus metadata) and ablation.csv (variant,iteration,perplexity).
void write_ablation(const AblationTable& table, const std::filesystem::path& dir);
std::string format_ablation(const AblationTable& table);

/// Handwritten renderings of `records`, normalized as the recognizer expects.
trainer::Dataset handwritten_heldout(const std::vector<corpus::FormulaRecord>& records, const corpus::Vocabulary& vocab,
                                     const trainer::RecTrainConfig& rec, std::uint64_t seed);

}  // namespace fgan::metrics
