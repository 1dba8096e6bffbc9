#include "fgan/metrics/sample_grid.hpp"

#include <algorithm>
#include <cmath>

#include "fgan/image/transform.hpp"
#include "fgan/trainer/gan_trainer.hpp"
#include "fgan/trainer/synthesis.hpp"

namespace fgan::metrics {

namespace {

void paste(image::GrayImage& canvas, const image::GrayImage& img, int top, int left) {
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) canvas(top + y, left + x) = img(y, x);
}

}  // namespace

GridLayout emit_sample_grid(const std::filesystem::path& generator_checkpoint, const std::vector<std::string>& formulas,
                            const std::filesystem::path& out, const image::RendererBackend& renderer,
                            const GridOptions& options) {
  if (options.height < 16 || options.height % 16 != 0) throw ConfigError("grid height must be a positive multiple of 16");
  if (options.gutter < 0) throw ConfigError("grid gutter must be non-negative");
  if (formulas.empty()) throw ConfigError("sample grid needs at least one formula");
  const trainer::LoadedGenerator gen = trainer::load_generator(generator_checkpoint);
  gen.generator->set_training(false);

  std::vector<image::GrayImage> inputs, outputs;
  for (std::size_t i = 0; i < formulas.size(); ++i) {
    const image::GrayImage raw = image::render(formulas[i], {}, renderer);
    const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(raw.width()) * options.height / raw.height())));
    inputs.push_back(image::resize_bilinear(raw, options.height, w));
    Rng rng(derive_seed(options.seed, std::to_string(i)));
    outputs.push_back(image::normalize_intensity(trainer::translate(*gen.generator, inputs.back(), options.target, rng)));
  }

  GridLayout layout;
  layout.rows = static_cast<int>(formulas.size());
  for (const auto& img : inputs) layout.column_width = std::max(layout.column_width, img.width());
  layout.width = 2 * layout.column_width + options.gutter;
  layout.height = layout.rows * options.height + (layout.rows - 1) * options.gutter;

  image::GrayImage canvas(layout.height, layout.width);
  for (int r = 0; r < layout.rows; ++r) {
    const int top = r * (options.height + options.gutter);
    paste(canvas, inputs[r], top, 0);
    paste(canvas, outputs[r], top, layout.column_width + options.gutter);
  }
  image::write_png(canvas, out);
  return layout;
}

}  // namespace fgan::metrics
