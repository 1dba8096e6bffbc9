#include <cmath>
#include <fstream>

#include "doctest.h"
#include "fixture.hpp"
#include "fgan/trainer/gan_trainer.hpp"

using namespace fgan;
using namespace fgan::trainer;
using fgan::testing::TrainerFixture;

namespace {

bool all_finite(const gan::GANLosses& l) {
  return std::isfinite(l.l_d) && std::isfinite(l.l_g) && std::isfinite(l.l_t) && std::isfinite(l.l_dt) &&
         std::isfinite(l.l_gt);
}

}  // namespace

TEST_CASE("the GAN dataset respects the training filters") {
  TrainerFixture fx;
  GANTrainConfig cfg = TrainerFixture::tiny_gan();
  cfg.max_tokens = 3;
  const GanDataset data = build_gan_dataset(fx.all, fx.vocab, fx.renderer, cfg);
  CHECK(data.skipped_tokens > 0);
  CHECK_FALSE(data.rendered.empty());
  for (const auto* pool : {&data.rendered, &data.handwritten})
    for (const auto& s : *pool) {
      CHECK(s.image.height() == cfg.input_height);
      CHECK(s.image.width() <= cfg.max_width);
      CHECK(s.token_ids.size() <= 3u);
    }
  CHECK(data.rendered.size() + data.handwritten.size() + data.skipped_width + data.skipped_render ==
        2 * (fx.all.size() - data.skipped_tokens));
}

TEST_CASE("batches pair every source with the opposite domain unless swapping is enabled") {
  TrainerFixture fx;
  GANTrainConfig cfg = TrainerFixture::tiny_gan();
  cfg.batch_size = 8;
  const GanDataset data = build_gan_dataset(fx.short_records, fx.vocab, fx.renderer, cfg);
  Rng rng(1);
  int from_handwritten = 0, same = 0;
  for (int i = 0; i < 30; ++i) {
    const GanBatch b = sample_gan_batch(data, cfg, rng);
    REQUIRE(b.sources.size() == 8);
    REQUIRE(b.reals.size() == 8);
    for (std::size_t k = 0; k < b.sources.size(); ++k) {
      CHECK(b.targets[k] != b.sources[k].domain);
      CHECK(b.reals[k].domain == b.targets[k]);
      from_handwritten += b.sources[k].domain == DomainLabel::Handwritten;
    }
  }
  CHECK(from_handwritten > 60);
  CHECK(from_handwritten < 180);

  cfg.handwritten_source = false;
  for (int i = 0; i < 10; ++i)
    for (const auto& s : sample_gan_batch(data, cfg, rng).sources) CHECK(s.domain == DomainLabel::Rendered);

  cfg.handwritten_source = true;
  cfg.swap_target = true;
  for (int i = 0; i < 30; ++i) {
    const GanBatch b = sample_gan_batch(data, cfg, rng);
    for (std::size_t k = 0; k < b.sources.size(); ++k) same += b.targets[k] == b.sources[k].domain;
  }
  CHECK(same > 0);
}

TEST_CASE("task model changes only in the discriminator phase, and not at all with lambda zero") {
  TrainerFixture fx;
  for (double lambda : {1.0, 0.0}) {
    GANTrainConfig cfg = TrainerFixture::tiny_gan();
    cfg.lambda = lambda;
    const GanDataset data = build_gan_dataset(fx.short_records, fx.vocab, fx.renderer, cfg);
    Rng rng(cfg.seed);
    GanModels models(gan_preset("tiny"), task_preset("compact", fx.vocab.size()), rng);
    GanOptimizers opt(models, cfg);
    for (int step = 0; step < 4; ++step) {
      StepProbe probe;
      const auto losses = gan_train_step(sample_gan_batch(data, cfg, rng), models, opt, cfg, rng, &probe);
      CHECK(all_finite(losses));
      CHECK(probe.task_after_g == probe.task_after_d);
      CHECK(probe.task_buffers_after_g == probe.task_buffers_after_d);
      if (lambda == 0) {
        CHECK(probe.task_after_d == probe.task_before);
        CHECK(losses.l_dt == losses.l_d);
        CHECK(losses.l_gt == losses.l_g);
      } else {
        CHECK(probe.task_after_d != probe.task_before);
        CHECK(losses.l_t > 0);
      }
    }
  }
}

TEST_CASE("generator and discriminator both move in one step") {
  TrainerFixture fx;
  const GANTrainConfig cfg = TrainerFixture::tiny_gan();
  const GanDataset data = build_gan_dataset(fx.short_records, fx.vocab, fx.renderer, cfg);
  Rng rng(cfg.seed);
  GanModels models(gan_preset("tiny"), task_preset("compact", fx.vocab.size()), rng);
  GanOptimizers opt(models, cfg);
  const auto g0 = parameter_hash(models.generator), d0 = parameter_hash(models.discriminator);
  gan_train_step(sample_gan_batch(data, cfg, rng), models, opt, cfg, rng);
  CHECK(parameter_hash(models.generator) != g0);
  CHECK(parameter_hash(models.discriminator) != d0);
  CHECK(opt.d.lr() == cfg.lr_d);
  CHECK(opt.g.lr() == cfg.lr_g);
}

TEST_CASE("images outside the filters are rejected before any update") {
  TrainerFixture fx;
  const GANTrainConfig cfg = TrainerFixture::tiny_gan();
  const GanDataset data = build_gan_dataset(fx.short_records, fx.vocab, fx.renderer, cfg);
  Rng rng(3);
  GanModels models(gan_preset("tiny"), task_preset("compact", fx.vocab.size()), rng);
  GanOptimizers opt(models, cfg);
  const auto g0 = parameter_hash(models.generator);

  GanBatch wide = sample_gan_batch(data, cfg, rng);
  wide.sources[0].image = image::GrayImage(cfg.input_height, cfg.max_width + 16);
  CHECK_THROWS_AS(gan_train_step(wide, models, opt, cfg, rng), FilterViolation);

  GanBatch tall = sample_gan_batch(data, cfg, rng);
  tall.reals[1].image = image::GrayImage(cfg.input_height + 16, 32);
  CHECK_THROWS_AS(gan_train_step(tall, models, opt, cfg, rng), FilterViolation);

  GanBatch verbose = sample_gan_batch(data, cfg, rng);
  verbose.sources[0].token_ids.assign(cfg.max_tokens + 1, corpus::Vocabulary::kNumSpecial);
  CHECK_THROWS_AS(gan_train_step(verbose, models, opt, cfg, rng), FilterViolation);
  CHECK(parameter_hash(models.generator) == g0);
}

TEST_CASE("training runs are deterministic and write their artifacts") {
  TrainerFixture fx;
  GANTrainConfig cfg = TrainerFixture::tiny_gan(21);
  cfg.max_iterations = 50;
  cfg.checkpoint_every = 25;
  const GanDataset data = build_gan_dataset(fx.short_records, fx.vocab, fx.renderer, cfg);
  const auto a_dir = fgan::testing::scratch_dir("gan_a"), b_dir = fgan::testing::scratch_dir("gan_b");
  const GanRunResult a = train_gan(cfg, data, fx.vocab, a_dir);
  const GanRunResult b = train_gan(cfg, data, fx.vocab, b_dir);
  REQUIRE(a.history.size() == 50);
  REQUIRE(b.history.size() == 50);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(all_finite(a.history[i]));
    CHECK(a.history[i].l_d == b.history[i].l_d);
    CHECK(a.history[i].l_g == b.history[i].l_g);
    CHECK(a.history[i].l_t == b.history[i].l_t);
  }
  CHECK(a.task_touched_in_g_phase == 0);
  for (const char* f : {"config.resolved", "metrics.csv", "gan.ckpt", "task.ckpt", "gan_step25.ckpt", "gan_step50.ckpt"})
    CHECK(std::filesystem::exists(a_dir / f));
  std::ifstream csv(a_dir / "metrics.csv");
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 50);

  const LoadedGenerator gen = load_generator(a_dir / "gan.ckpt");
  CHECK(gen.config.to_json() == gan_preset("tiny").to_json());
  CHECK_THROWS_AS(load_generator(a_dir / "task.ckpt"), CheckpointMismatch);

  cfg.seed = 22;
  const GanRunResult c = train_gan(cfg, data, fx.vocab, b_dir);
  CHECK(c.history[10].l_d != a.history[10].l_d);
  std::filesystem::remove_all(a_dir);
  std::filesystem::remove_all(b_dir);
}
