#include <cmath>
#include <fstream>
#include <sstream>

#include "../trainer/fixture.hpp"
#include "doctest.h"
#include "fgan/metrics/ablation.hpp"
#include "fgan/metrics/sample_grid.hpp"
#include "fgan/recognizer/recognizer.hpp"
#include "fgan/trainer/gan_trainer.hpp"

using namespace fgan;
using namespace fgan::metrics;
using fgan::testing::TrainerFixture;
using fgan::testing::scratch_dir;

namespace {

std::string bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path tiny_generator(const TrainerFixture& fx, const std::filesystem::path& dir) {
  auto cfg = TrainerFixture::tiny_gan(3);
  cfg.max_iterations = 2;
  const auto data = trainer::build_gan_dataset(fx.short_records, fx.vocab, fx.renderer, cfg);
  trainer::train_gan(cfg, data, fx.vocab, dir);
  return dir / "gan.ckpt";
}

}  // namespace

TEST_CASE("sample grid has one row per formula and the documented geometry") {
  TrainerFixture fx;
  const auto dir = scratch_dir("fgan_grid");
  const auto ckpt = tiny_generator(fx, dir / "gan");
  const std::vector<std::string> formulas = {"x + 1", "\\frac{a}{b}", "\\sqrt{2}", "y^{2} = z"};

  GridOptions opt;
  opt.height = 32;
  opt.gutter = 5;
  opt.seed = 9;
  const GridLayout layout = emit_sample_grid(ckpt, formulas, dir / "grid.png", fx.renderer, opt);

  int widest = 0;
  for (const auto& f : formulas) {
    const auto raw = image::render(f, {}, fx.renderer);
    widest = std::max(widest, static_cast<int>(std::lround(raw.width() * 32.0 / raw.height())));
  }
  CHECK(layout.rows == 4);
  CHECK(layout.cols == 2);
  CHECK(layout.column_width == widest);
  CHECK(layout.width == 2 * widest + 5);
  CHECK(layout.height == 4 * 32 + 3 * 5);

  const auto png = image::read_png(dir / "grid.png");
  CHECK(png.height() == layout.height);
  CHECK(png.width() == layout.width);
  // Row gutters carry no ink.
  double gutter_ink = 0;
  for (int r = 1; r < 4; ++r)
    for (int y = r * 37 - 5; y < r * 37; ++y)
      for (int x = 0; x < png.width(); ++x) gutter_ink += png(y, x);
  CHECK(gutter_ink == 0.0);

  emit_sample_grid(ckpt, formulas, dir / "again.png", fx.renderer, opt);
  CHECK(bytes(dir / "grid.png") == bytes(dir / "again.png"));

  Rng rng(1);
  recognizer::Recognizer rec(trainer::task_preset("compact", fx.vocab.size()), rng);
  recognizer::save_recognizer(rec, fx.vocab, dir / "rec.ckpt");
  CHECK_THROWS_AS(emit_sample_grid(dir / "rec.ckpt", formulas, dir / "bad.png", fx.renderer, opt), CheckpointMismatch);
  opt.height = 20;
  CHECK_THROWS_AS(emit_sample_grid(ckpt, formulas, dir / "bad.png", fx.renderer, opt), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("desk ablation fills a variants-by-iterations table and repeats exactly") {
  TrainerFixture fx;
  const auto dir = scratch_dir("fgan_ablation");
  auto make = [&](const std::filesystem::path& out) {
    AblationConfig cfg = desk_ablation_config(4);
    cfg.variants = lambda_variants(desk_gan_config(4), {0.0, 1.0});
    cfg.iterations = {1, 2};
    cfg.train_records.assign(fx.short_records.begin(), fx.short_records.begin() + 6);
    cfg.heldout_records.assign(fx.short_records.begin() + 6, fx.short_records.begin() + 10);
    cfg.recognizer.max_steps = 3;
    cfg.recognizer.steps_per_epoch = 3;
    cfg.recognizer.batch_size = 2;
    cfg.recognizer.bn_batches = 2;
    cfg.out_dir = out;
    return cfg;
  };

  const AblationTable a = ablation_run(make(dir / "a"), fx.vocab, fx.renderer);
  REQUIRE(a.variants == std::vector<std::string>{"lambda=0", "lambda=1"});
  REQUIRE(a.iterations == std::vector<int>{1, 2});
  REQUIRE(a.perplexity.size() == 2);
  for (const auto& row : a.perplexity) {
    REQUIRE(row.size() == 2);
    for (double p : row) {
      CHECK(std::isfinite(p));
      CHECK(p >= 1.0);
    }
  }
  write_ablation(a, dir / "a");
  std::ifstream csv(dir / "a" / "ablation.csv");
  std::vector<std::string> lines;
  for (std::string l; std::getline(csv, l);) lines.push_back(l);
  CHECK(lines.size() == 5);
  CHECK(lines[0] == "variant,iteration,perplexity");

  const AblationTable b = ablation_run(make(dir / "b"), fx.vocab, fx.renderer);
  CHECK(a.perplexity == b.perplexity);

  AblationConfig bad = make(dir / "c");
  bad.iterations = {2, 2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  std::filesystem::remove_all(dir);
}
