#include <fstream>

#include "doctest.h"
#include "fixture.hpp"
#include "fgan/trainer/gan_trainer.hpp"
#include "fgan/trainer/rec_trainer.hpp"

using namespace fgan;
using namespace fgan::trainer;
using fgan::testing::TrainerFixture;

namespace {

struct DummyOptimizer : Optimizer {
  DummyOptimizer() : Optimizer({}) { set_lr(1.0); }
  void step() override {}
};

Dataset rendered_dataset(const TrainerFixture& fx, const std::vector<corpus::FormulaRecord>& records, int symbol_height) {
  Dataset ds{"rendered", {}};
  for (const auto& r : records) {
    const auto img = normalize_for_recognition(image::render(r.source_latex, {}, fx.renderer), r.source_latex,
                                               NormalizeMode::SymbolHeight, symbol_height, 0);
    ds.samples.push_back({r.id, r.source_latex, *img, fx.vocab.encode(r.tokens), DomainLabel::Rendered});
  }
  return ds;
}

}  // namespace

TEST_CASE("plateau scheduler divides the rate once per plateau") {
  DummyOptimizer opt;
  PlateauScheduler s(opt, 3, 10.0);
  CHECK_FALSE(s.step(10));  // first evaluation always improves
  CHECK(s.improved_last());
  CHECK_FALSE(s.step(10));  // equal is not an improvement
  CHECK_FALSE(s.step(9));
  CHECK(s.step(10));        // third stale evaluation
  CHECK(opt.lr() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_FALSE(s.step(10));  // counting restarts after a reduction
  CHECK_FALSE(s.step(10));
  CHECK(s.step(10));
  CHECK(opt.lr() == doctest::Approx(0.01).epsilon(1e-15));
  CHECK_FALSE(s.step(11));
  CHECK_FALSE(s.step(11));
  CHECK_FALSE(s.step(12));  // improvement resets the count
  CHECK_FALSE(s.step(12));
  CHECK_FALSE(s.step(12));
  CHECK(s.step(12));
  CHECK(s.reductions() == 3);
  CHECK(s.best() == 12);
}

TEST_CASE("property: a plateau of exactly `patience` evaluations triggers one reduction") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    DummyOptimizer opt;
    const int patience = rng.uniform_int(1, 6);
    PlateauScheduler s(opt, patience, 10.0);
    s.step(0);
    int fired = 0;
    for (int k = 0; k < patience; ++k) fired += s.step(-1);
    CHECK(fired == 1);
    CHECK(opt.lr() == doctest::Approx(0.1).epsilon(1e-15));
    fired = 0;
    for (int k = 0; k < patience - 1; ++k) fired += s.step(-1);
    CHECK(fired == 0);
  }
}

TEST_CASE("recognizer training logs epochs, keeps the best checkpoint and is deterministic") {
  TrainerFixture fx;
  const std::vector<corpus::FormulaRecord> records(fx.short_records.begin(), fx.short_records.begin() + 6);
  const Dataset ds = rendered_dataset(fx, records, 16);
  RecTrainConfig cfg;
  cfg.preset = "compact";
  cfg.max_steps = 12;
  cfg.steps_per_epoch = 4;
  cfg.plateau_patience = 1;
  cfg.seed = 9;
  const auto a_dir = fgan::testing::scratch_dir("rec_a"), b_dir = fgan::testing::scratch_dir("rec_b");
  const RecTrainResult a = train_recognizer({ds}, ds, cfg, fx.vocab, a_dir);
  const RecTrainResult b = train_recognizer({ds}, ds, cfg, fx.vocab, b_dir);
  CHECK(a.steps == 12);
  REQUIRE(a.losses.size() == 12);
  CHECK(a.losses == b.losses);
  CHECK(a.epochs.size() == 3);
  for (double l : a.losses) CHECK(std::isfinite(l));
  CHECK(std::filesystem::exists(a_dir / "best.ckpt"));
  CHECK(std::filesystem::exists(a_dir / "validation.csv"));
  CHECK(std::filesystem::exists(a_dir / "config.resolved"));
  const auto loaded = recognizer::load_recognizer(a_dir / "best.ckpt");
  CHECK(loaded.vocabulary.size() == fx.vocab.size());

  // A constant ExpRate (all epochs at 0 with patience 1) reduces the rate after each stale epoch.
  int reductions = 0;
  for (const auto& e : a.epochs) reductions += e.lr_reduced;
  CHECK(reductions == a.lr_reductions);

  CHECK_THROWS_AS(train_recognizer({Dataset{}}, Dataset{}, cfg, fx.vocab, a_dir), EmptyDataset);
  std::filesystem::remove_all(a_dir);
  std::filesystem::remove_all(b_dir);
}

TEST_CASE("mixture training draws from both sources") {
  TrainerFixture fx;
  const std::vector<corpus::FormulaRecord> first(fx.short_records.begin(), fx.short_records.begin() + 3);
  const std::vector<corpus::FormulaRecord> second(fx.short_records.begin() + 3, fx.short_records.begin() + 6);
  const Dataset a = rendered_dataset(fx, first, 16), b = rendered_dataset(fx, second, 16);
  RecTrainConfig cfg;
  cfg.preset = "compact";
  cfg.max_steps = 3;
  const auto dir = fgan::testing::scratch_dir("rec_mix");
  const RecTrainResult r = train_recognizer({a, b}, Dataset{}, cfg, fx.vocab, dir);
  CHECK(r.steps == 3);
  std::filesystem::remove_all(dir);
}
