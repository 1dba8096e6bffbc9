#include <cmath>

#include "doctest.h"
#include "fixture.hpp"
#include "fgan/image/manifest.hpp"
#include "fgan/image/transform.hpp"
#include "fgan/trainer/gan_trainer.hpp"
#include "fgan/trainer/synthesis.hpp"

using namespace fgan;
using namespace fgan::trainer;
using fgan::testing::TrainerFixture;

namespace {

std::filesystem::path tiny_checkpoint(const std::filesystem::path& dir) {
  Rng rng(2);
  TrainerFixture fx;
  GanModels models(gan_preset("tiny"), task_preset("compact", fx.vocab.size()), rng);
  save_gan(models, dir / "gan.ckpt");
  return dir / "gan.ckpt";
}

// Expected survivors of the area filter, recomputed from the render parameters each record draws.
std::size_t expected_accepted(const TrainerFixture& fx, const std::vector<corpus::FormulaRecord>& records,
                              const SynthesisConfig& cfg) {
  std::size_t n = 0;
  for (const auto& r : records) {
    Rng rng(derive_seed(cfg.seed, r.id));
    const auto raw = image::render(r.source_latex, image::sample_render_params(rng), fx.renderer);
    const double w = std::lround(static_cast<double>(raw.width()) * cfg.height / raw.height());
    n += static_cast<double>(cfg.height) * w < static_cast<double>(cfg.max_pixel_area);
  }
  return n;
}

}  // namespace

TEST_CASE("synthesis over the bundled corpus writes one image per accepted record with unchanged labels") {
  TrainerFixture fx;
  const auto dir = fgan::testing::scratch_dir("synth");
  const auto ckpt = tiny_checkpoint(dir);
  SynthesisConfig cfg;
  cfg.height = 32;
  cfg.output_dir = dir / "out";
  cfg.seed = 3;
  const SynthesisReport rep = synthesize_dataset(ckpt, fx.all, fx.vocab, cfg, fx.renderer);
  CHECK(rep.skipped_render == 0);
  CHECK(rep.skipped_area == 0);
  CHECK(rep.written == fx.all.size());
  CHECK(rep.written == 200);

  const auto rows = image::read_manifest(cfg.output_dir);
  REQUIRE(rows.size() == rep.written);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].record.id == fx.all[i].id);
    CHECK(rows[i].record.tokens == fx.all[i].tokens);
    CHECK(rows[i].token_ids == fx.vocab.encode(fx.all[i].tokens));
    CHECK(rows[i].record.domain == DomainLabel::Handwritten);
    CHECK(rows[i].height == 32);
  }
  const auto img = image::read_png(cfg.output_dir / *rows[0].record.image_path);
  float lo = 1, hi = 0;
  for (float v : img.pixels()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == doctest::Approx(0.0).epsilon(1e-2));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-2));
  std::filesystem::remove_all(dir);
}

TEST_CASE("the area filter is strict and counts every skipped record") {
  TrainerFixture fx;
  const auto dir = fgan::testing::scratch_dir("synth_area");
  const auto ckpt = tiny_checkpoint(dir);
  const std::vector<corpus::FormulaRecord> records(fx.all.begin(), fx.all.begin() + 30);
  SynthesisConfig cfg;
  cfg.height = 32;
  cfg.max_pixel_area = 32 * 160;
  cfg.output_dir = dir / "out";
  const std::size_t expected = expected_accepted(fx, records, cfg);
  CHECK(expected > 0);
  CHECK(expected < records.size());
  const SynthesisReport rep = synthesize_dataset(ckpt, records, fx.vocab, cfg, fx.renderer);
  CHECK(rep.written == expected);
  CHECK(rep.written + rep.skipped_area == records.size());
  for (const auto& row : image::read_manifest(cfg.output_dir))
    CHECK(static_cast<std::size_t>(row.height) * row.width < cfg.max_pixel_area);
  std::filesystem::remove_all(dir);
}

TEST_CASE("translation keeps the input size and synthesis rejects other checkpoints") {
  TrainerFixture fx;
  const auto dir = fgan::testing::scratch_dir("synth_ckpt");
  const auto ckpt = tiny_checkpoint(dir);
  const LoadedGenerator gen = load_generator(ckpt);
  Rng rng(1);
  const image::GrayImage out = translate(*gen.generator, image::GrayImage(32, 45, 0.2f), DomainLabel::Handwritten, rng);
  CHECK(out.height() == 32);
  CHECK(out.width() == 45);

  Rng r2(3);
  recognizer::Recognizer rec(task_preset("compact", fx.vocab.size()), r2);
  recognizer::save_recognizer(rec, fx.vocab, dir / "rec.ckpt");
  SynthesisConfig cfg;
  cfg.output_dir = dir / "out";
  CHECK_THROWS_AS(synthesize_dataset(dir / "rec.ckpt", fx.short_records, fx.vocab, cfg, fx.renderer), CheckpointMismatch);
  std::filesystem::remove_all(dir);
}
