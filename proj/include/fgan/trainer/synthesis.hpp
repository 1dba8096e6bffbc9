#pragma once

#include <filesystem>
#include <vector>

#include "fgan/trainer/gan_trainer.hpp"

namespace fgan::trainer {

struct SynthesisReport {
  std::size_t written = 0;
  std::size_t skipped_area = 0;    // height*width not below max_pixel_area after scaling
  std::size_t skipped_render = 0;  // renderer rejected the formula
  std::filesystem::path manifest;
};

/// Renders each record (fonts and sizes sampled when cfg.sample_fonts), scales it to
/// cfg.height, drops it unless height*width < max_pixel_area, translates it into cfg.target
/// with the generator and writes <output_dir>/images/<id>.png plus the manifest. Rows keep
/// the source record's tokens and ids.
SynthesisReport synthesize_dataset(const std::filesystem::path& generator_checkpoint,
                                   const std::vector<corpus::FormulaRecord>& records, const corpus::Vocabulary& vocab,
                                   const SynthesisConfig& cfg, const image::RendererBackend& renderer);

/// Generator translation of one image (any width; padded to a multiple of 16 and cropped back).
image::GrayImage translate(const gan::Generator& generator, const image::GrayImage& img, DomainLabel target, Rng& rng);

}  // namespace fgan::trainer
