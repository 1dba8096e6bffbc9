#include "fgan/trainer/rec_trainer.hpp"

#include <cmath>
#include <fstream>

#include "fgan/trainer/gan_trainer.hpp"

namespace fgan::trainer {

PlateauScheduler::PlateauScheduler(Optimizer& opt, int patience, double factor)
    : opt_(opt), patience_(patience), factor_(factor) {
  if (patience < 1) throw ConfigError("plateau patience must be >= 1");
  if (!(factor > 1)) throw ConfigError("plateau factor must exceed 1");
}

bool PlateauScheduler::step(double metric) {
  improved_ = metric > best_;
  if (improved_) {
    best_ = metric;
    stale_ = 0;
    return false;
  }
  if (++stale_ < patience_) return false;
  opt_.set_lr(opt_.lr() / factor_);
  stale_ = 0;
  ++reductions_;
  return true;
}

double greedy_exprate(const recognizer::Recognizer& model, const std::vector<Sample>& samples, int max_len) {
  if (samples.empty()) throw EmptyDataset("ExpRate over no samples");
  int exact = 0;
  for (const auto& s : samples) {
    const int horizon = max_len > 0 ? max_len : static_cast<int>(s.token_ids.size()) + 10;
    const auto hyp = model.greedy(s.image, horizon);
    if (hyp.finished && hyp.body() == s.token_ids) ++exact;
  }
  return 100.0 * exact / static_cast<double>(samples.size());
}

RecTrainResult train_recognizer(const std::vector<Dataset>& mix, const Dataset& validation, const RecTrainConfig& cfg,
                                const corpus::Vocabulary& vocab, const std::filesystem::path& out_dir) {
  Rng init(cfg.seed);
  recognizer::Recognizer model(task_preset(cfg.preset, vocab.size()), init);
  return train_recognizer(model, mix, validation, cfg, vocab, out_dir);
}

namespace {

// Batch statistics of small, unevenly padded batches are noisy; averaging them exactly over a
// fixed set of training batches gives inference statistics that match training far better than
// the exponential running average.
void recalibrate(recognizer::Recognizer& model, const std::vector<Dataset>& mix, const RecTrainConfig& cfg) {
  std::vector<std::vector<image::GrayImage>> batches;
  for (const auto& d : mix)
    for (std::size_t i = 0; i < d.samples.size() && static_cast<int>(batches.size()) < cfg.bn_batches;
         i += cfg.batch_size) {
      batches.emplace_back();
      for (std::size_t k = i; k < std::min(d.samples.size(), i + cfg.batch_size); ++k)
        batches.back().push_back(d.samples[k].image);
    }
  recalibrate_batchnorm(model, static_cast<int>(batches.size()),
                        [&](int k) { model.encode(constant(stack_padded(batches[k], 16))); });
}

}  // namespace

RecTrainResult train_recognizer(recognizer::Recognizer& model, const std::vector<Dataset>& mix,
                                const Dataset& validation, const RecTrainConfig& cfg, const corpus::Vocabulary& vocab,
                                const std::filesystem::path& out_dir) {
  cfg.validate();
  std::vector<double> weights;
  std::size_t largest = 0;
  for (const auto& d : mix) {
    weights.push_back(d.samples.empty() ? 0.0 : 1.0);
    largest = std::max(largest, d.samples.size());
  }
  if (largest == 0) throw EmptyDataset("every training source is empty");
  const std::vector<Sample>& val = validation.samples.empty() ? mix.front().samples : validation.samples;
  if (val.empty()) throw EmptyDataset("no validation samples");
  const MixSampler sampler(weights);

  std::filesystem::create_directories(out_dir);
  write_resolved(out_dir, to_json(cfg));
  MetricsLog log(out_dir / "metrics.csv");
  std::ofstream vlog(out_dir / "validation.csv");
  vlog << "epoch,step,exprate,lr\n";

  Rng rng(mix64(cfg.seed + 1));
  SgdMomentum opt(model.parameters(), cfg.lr, cfg.momentum);
  PlateauScheduler sched(opt, cfg.plateau_patience, cfg.lr_decay_factor);
  const int steps_per_epoch = cfg.steps_per_epoch > 0
                                  ? cfg.steps_per_epoch
                                  : static_cast<int>((largest + cfg.batch_size - 1) / cfg.batch_size);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  RecTrainResult result;
  result.best_checkpoint = out_dir / "best.ckpt";
  int epoch = 0;
  while (result.steps < cfg.max_steps) {
    model.set_training(true);
    for (int s = 0; s < steps_per_epoch && result.steps < cfg.max_steps; ++s) {
      std::vector<image::GrayImage> imgs;
      std::vector<std::vector<int>> targets;
      for (int b = 0; b < cfg.batch_size; ++b) {
        const auto& pool = mix[sampler.next(rng)].samples;
        const Sample& smp = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
        imgs.push_back(smp.image);
        targets.push_back(smp.token_ids);
      }
      opt.zero_grad();
      const Var loss = model.loss(constant(stack_padded(imgs, 16)), targets);
      if (!std::isfinite(loss.item())) throw NonFiniteLoss("recognizer loss became " + std::to_string(loss.item()));
      backward(loss);
      if (cfg.clip_norm > 0) opt.clip_grad_norm(cfg.clip_norm);
      opt.step();
      ++result.steps;
      result.losses.push_back(loss.item());
      log.append(result.steps, nan, nan, loss.item(), opt.lr());
    }
    ++epoch;
    recalibrate(model, mix, cfg);
    model.set_training(false);
    EpochRecord rec{epoch, result.steps, greedy_exprate(model, val), opt.lr(), false};
    rec.lr_reduced = sched.step(rec.exprate);
    if (sched.improved_last()) {
      result.best_exprate = rec.exprate;
      recognizer::save_recognizer(model, vocab, result.best_checkpoint);
    }
    vlog << rec.epoch << ',' << rec.step << ',' << rec.exprate << ',' << rec.lr << '\n' << std::flush;
    result.epochs.push_back(rec);
    if (rec.exprate >= cfg.target_exprate) break;
  }
  result.lr_reductions = sched.reductions();
  model.set_training(false);
  return result;
}

}  // namespace fgan::trainer
