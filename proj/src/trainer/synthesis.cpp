#include "fgan/trainer/synthesis.hpp"

#include "fgan/image/manifest.hpp"
#include "fgan/image/transform.hpp"

namespace fgan::trainer {

using image::GrayImage;

GrayImage translate(const gan::Generator& generator, const GrayImage& img, DomainLabel target, Rng& rng) {
  NoGradGuard guard;
  const GrayImage padded = image::pad_to_multiple(img, 16);
  const Var z = constant(rng.normal_tensor({1, generator.config().z_dim}));
  const Var out = generator.forward(constant(image::to_tensor(padded)), z, {target});
  return image::crop(image::from_tensor(out.value()), 0, 0, img.height(), img.width());
}

SynthesisReport synthesize_dataset(const std::filesystem::path& generator_checkpoint,
                                   const std::vector<corpus::FormulaRecord>& records, const corpus::Vocabulary& vocab,
                                   const SynthesisConfig& cfg, const image::RendererBackend& renderer) {
  cfg.validate();
  const LoadedGenerator gen = load_generator(generator_checkpoint);
  const auto& dir = cfg.output_dir;
  std::filesystem::create_directories(dir / "images");
  write_resolved(dir, to_json(cfg));

  SynthesisReport report;
  std::vector<image::ManifestEntry> entries;
  for (const auto& rec : records) {
    Rng rng(derive_seed(cfg.seed, rec.id));
    GrayImage raw;
    try {
      raw = image::render(rec.source_latex, cfg.sample_fonts ? image::sample_render_params(rng) : image::RenderParams{},
                          renderer);
    } catch (const image::RenderFailure&) {
      ++report.skipped_render;
      continue;
    }
    const int width = std::max(1, static_cast<int>(std::lround(static_cast<double>(raw.width()) * cfg.height / raw.height())));
    if (!within_area_limit(cfg.height, width, cfg.max_pixel_area)) {
      ++report.skipped_area;
      continue;
    }
    const GrayImage scaled = image::resize_bilinear(raw, cfg.height, width);
    const GrayImage synth = image::normalize_intensity(translate(*gen.generator, scaled, cfg.target, rng));
    const std::string rel = "images/" + rec.id + ".png";
    image::write_png(synth, dir / rel);
    image::ManifestEntry e{rec, vocab.encode(rec.tokens), synth.height(), synth.width()};
    e.record.domain = cfg.target;
    e.record.image_path = rel;
    entries.push_back(std::move(e));
    ++report.written;
  }
  image::write_manifest(entries, dir);
  report.manifest = dir / image::kManifestName;
  return report;
}

}  // namespace fgan::trainer
