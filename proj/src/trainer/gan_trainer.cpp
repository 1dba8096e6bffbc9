#include "fgan/trainer/gan_trainer.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "fgan/core/checkpoint.hpp"
#include "fgan/image/transform.hpp"

namespace fgan::trainer {

using corpus::Vocabulary;
using image::GrayImage;

gan::GanConfig gan_preset(const std::string& name) {
  if (name == "default") return gan::GanConfig::default_preset();
  if (name == "tiny") return gan::GanConfig::tiny_preset();
  throw ConfigError("unknown GAN preset '" + name + "'");
}

recognizer::RecognizerConfig task_preset(const std::string& name, int vocab_size) {
  if (name == "small") return recognizer::RecognizerConfig::small_preset(vocab_size);
  if (name == "compact") return recognizer::RecognizerConfig::compact_preset(vocab_size);
  if (name == "large") return recognizer::RecognizerConfig::large_preset(vocab_size);
  throw ConfigError("unknown recognizer preset '" + name + "'");
}

GanModels::GanModels(const gan::GanConfig& gan_cfg, const recognizer::RecognizerConfig& task_cfg, Rng& rng)
    : config(gan_cfg), generator(gan_cfg.generator, rng), discriminator(gan_cfg.discriminator, rng), task(task_cfg, rng) {}

namespace {

std::vector<Var> join(std::vector<Var> a, const std::vector<Var>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

GanOptimizers::GanOptimizers(GanModels& m, const GANTrainConfig& cfg)
    : d(join(m.discriminator.parameters(), m.task.parameters()), cfg.lr_d, cfg.beta1, cfg.beta2),
      g(m.generator.parameters(), cfg.lr_g, cfg.beta1, cfg.beta2) {}

std::uint64_t buffer_hash(const Module& m) {
  std::uint64_t h = parameter_hash(m);
  for (const auto& [name, buf] : m.named_buffers()) {
    for (Real v : buf->values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
  }
  return h;
}

GanDataset build_gan_dataset(const std::vector<corpus::FormulaRecord>& records, const Vocabulary& vocab,
                             const image::RendererBackend& renderer, const GANTrainConfig& cfg) {
  GanDataset data;
  for (const auto& rec : records) {
    if (!within_token_limit(rec.tokens.size(), cfg.max_tokens)) {
      ++data.skipped_tokens;
      continue;
    }
    const std::vector<int> ids = vocab.encode(rec.tokens);
    Rng rng(derive_seed(cfg.seed, rec.id));
    for (DomainLabel d : {DomainLabel::Rendered, DomainLabel::Handwritten}) {
      GrayImage raw;
      try {
        raw = d == DomainLabel::Rendered ? image::render(rec.source_latex, image::sample_render_params(rng), renderer)
                                         : image::render_handwritten(rec.source_latex, rng);
      } catch (const image::RenderFailure&) {
        ++data.skipped_render;
        continue;
      }
      auto img = image::resize_for_training(raw, cfg.input_height, cfg.max_width);
      if (!img) {
        ++data.skipped_width;
        continue;
      }
      Sample s{rec.id, rec.source_latex, std::move(*img), ids, d};
      (d == DomainLabel::Rendered ? data.rendered : data.handwritten).push_back(std::move(s));
    }
  }
  return data;
}

namespace {

const Sample& pick(const std::vector<Sample>& pool, Rng& rng) {
  return pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
}

Sample maybe_augment(const Sample& s, const GANTrainConfig& cfg, Rng& rng) {
  if (!cfg.augment) return s;
  Sample out = s;
  const GrayImage aug = image::augment(s.image, image::AugmentRanges{}, rng);
  if (auto img = image::resize_for_training(aug, cfg.input_height, cfg.max_width)) out.image = std::move(*img);
  return out;
}

void check_filters(const std::vector<Sample>& samples, const GANTrainConfig& cfg) {
  for (const auto& s : samples) {
    if (s.image.height() != cfg.input_height || !within_width_limit(s.image.width(), cfg.max_width) ||
        !within_token_limit(s.token_ids.size(), cfg.max_tokens)) {
      std::ostringstream msg;
      msg << "sample " << s.id << " (" << s.image.height() << "x" << s.image.width() << ", " << s.token_ids.size()
          << " tokens) violates the training filters";
      throw FilterViolation(msg.str());
    }
  }
}

Var images_of(const std::vector<Sample>& samples, std::vector<int>* widths) {
  std::vector<GrayImage> imgs;
  for (const auto& s : samples) imgs.push_back(s.image);
  return constant(stack_padded(imgs, 16, widths));
}

std::vector<std::vector<int>> labels_of(const std::vector<Sample>& samples) {
  std::vector<std::vector<int>> out;
  for (const auto& s : samples) out.push_back(s.token_ids);
  return out;
}

std::vector<DomainLabel> domains_of(const std::vector<Sample>& samples) {
  std::vector<DomainLabel> out;
  for (const auto& s : samples) out.push_back(s.domain);
  return out;
}

Tensor column_mask(const std::vector<int>& widths, int H, int W) {
  Tensor m({static_cast<int>(widths.size()), 1, H, W});
  for (std::size_t n = 0; n < widths.size(); ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < widths[n]; ++x) m[(n * H + y) * W + x] = 1.0;
  return m;
}

void require_finite(const char* name, double v, int batch) {
  if (!std::isfinite(v))
    throw NonFiniteLoss(std::string(name) + " became " + std::to_string(v) + " on a batch of " + std::to_string(batch));
}

}  // namespace

GanBatch sample_gan_batch(const GanDataset& data, const GANTrainConfig& cfg, Rng& rng) {
  if (data.rendered.empty()) throw EmptyDataset("no rendered images passed the filters");
  if (data.handwritten.empty()) throw EmptyDataset("no handwritten images passed the filters");
  GanBatch b;
  const bool hw_sources = cfg.handwritten_source && cfg.bidirectional;
  for (int i = 0; i < cfg.batch_size; ++i) {
    const DomainLabel src = hw_sources && rng.bernoulli(0.5) ? DomainLabel::Handwritten : DomainLabel::Rendered;
    DomainLabel tgt = other_domain(src);
    if (cfg.swap_target) tgt = rng.bernoulli(0.5) ? DomainLabel::Handwritten : DomainLabel::Rendered;
    b.sources.push_back(maybe_augment(pick(src == DomainLabel::Rendered ? data.rendered : data.handwritten, rng), cfg, rng));
    b.targets.push_back(tgt);
  }
  for (DomainLabel tgt : b.targets)
    b.reals.push_back(maybe_augment(pick(tgt == DomainLabel::Rendered ? data.rendered : data.handwritten, rng), cfg, rng));
  return b;
}

gan::GANLosses gan_train_step(const GanBatch& batch, GanModels& m, GanOptimizers& opt, const GANTrainConfig& cfg,
                              Rng& rng, StepProbe* probe) {
  const int N = static_cast<int>(batch.sources.size());
  if (N == 0 || batch.reals.empty()) throw EmptyBatch("GAN step needs sources and real images");
  if (batch.targets.size() != batch.sources.size()) throw ShapeMismatch("one target domain per source image");
  check_filters(batch.sources, cfg);
  check_filters(batch.reals, cfg);
  const bool use_task = cfg.lambda > 0;
  if (probe) probe->task_before = parameter_hash(m.task);

  std::vector<int> widths;
  const Var x = images_of(batch.sources, &widths);
  const Var reals = images_of(batch.reals, nullptr);
  const auto src_labels = labels_of(batch.sources);
  const Var z = constant(rng.normal_tensor({N, m.config.generator.z_dim}));
  const Var mask = constant(column_mask(widths, x.dim(2), x.dim(3)));

  m.generator.set_training(true);
  m.discriminator.set_training(true);
  const Var fake = ops::mul(m.generator.forward(x, z, batch.targets), mask);

  // Discriminator (and task model) phase.
  opt.d.zero_grad();
  const Var fake_d = ops::detach(fake);
  const Var l_d = gan::hinge_d_loss(m.discriminator.forward(reals, domains_of(batch.reals)),
                                    m.discriminator.forward(fake_d, batch.targets));
  Var l_dt = l_d;
  double l_t = 0;
  if (use_task) {
    m.task.set_training(true);
    Var lt = m.task.loss(fake_d, src_labels);
    if (cfg.task_sees_real) lt = ops::add(lt, m.task.loss(reals, labels_of(batch.reals)));
    l_t = lt.item();
    l_dt = ops::add(l_d, ops::scale(lt, cfg.lambda));
  }
  require_finite("L_D", l_d.item(), N);
  require_finite("L_T", l_t, N);
  backward(l_dt);
  opt.d.step();
  if (probe) {
    probe->task_after_d = parameter_hash(m.task);
    probe->task_buffers_after_d = buffer_hash(m.task);
  }

  // Generator phase. The task model is frozen here: inference mode, gradients dropped.
  opt.g.zero_grad();
  const Var l_g = gan::hinge_g_loss(m.discriminator.forward(fake, batch.targets));
  Var l_gt = l_g;
  if (use_task) {
    m.task.set_training(false);
    l_gt = ops::add(l_g, ops::scale(m.task.loss(fake, src_labels), cfg.lambda));
    m.task.set_training(true);
  }
  require_finite("L_G", l_g.item(), N);
  require_finite("L_GT", l_gt.item(), N);
  backward(l_gt);
  opt.g.step();
  m.discriminator.zero_grad();
  m.task.zero_grad();
  if (probe) {
    probe->task_after_g = parameter_hash(m.task);
    probe->task_buffers_after_g = buffer_hash(m.task);
  }

  gan::GANLosses out = gan::combine_losses(l_d.item(), l_g.item(), l_t, cfg.lambda);
  out.l_dt = l_dt.item();
  out.l_gt = l_gt.item();
  return out;
}

void save_gan(const GanModels& models, const std::filesystem::path& path) {
  CheckpointArchive archive{kGanKind, models.config.to_json(), {}};
  collect_arrays(archive, "generator", models.generator);
  collect_arrays(archive, "discriminator", models.discriminator);
  write_checkpoint(archive, path);
}

LoadedGenerator load_generator(const std::filesystem::path& path) {
  const CheckpointArchive archive = read_checkpoint(path);
  if (archive.kind != kGanKind)
    throw CheckpointMismatch(path.string() + " holds a '" + archive.kind + "' checkpoint, expected a GAN");
  LoadedGenerator out;
  try {
    out.config = gan::GanConfig::from_json(archive.config);
  } catch (const Error& e) {
    throw CheckpointMismatch(std::string("GAN checkpoint config: ") + e.what());
  }
  Rng rng(0);
  out.generator = std::make_unique<gan::Generator>(out.config.generator, rng);
  restore_arrays(archive, "generator", *out.generator);
  out.generator->set_training(false);
  return out;
}

GanRunResult train_gan(const GANTrainConfig& cfg, const GanDataset& data, const Vocabulary& vocab,
                       const std::filesystem::path& out_dir,
                       const std::function<void(int, const gan::GANLosses&, const GanModels&)>& on_step) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  write_resolved(out_dir, to_json(cfg));
  Rng rng(cfg.seed);
  GanModels models(gan_preset(cfg.model_preset), task_preset(cfg.task_preset, vocab.size()), rng);
  GanOptimizers opt(models, cfg);
  MetricsLog log(out_dir / "metrics.csv");
  GanRunResult result;
  for (int step = 1; step <= cfg.max_iterations; ++step) {
    const GanBatch batch = sample_gan_batch(data, cfg, rng);
    StepProbe probe;
    const gan::GANLosses l = gan_train_step(batch, models, opt, cfg, rng, &probe);
    if (probe.task_after_d != probe.task_after_g || probe.task_buffers_after_d != probe.task_buffers_after_g)
      ++result.task_touched_in_g_phase;
    result.history.push_back(l);
    log.append(step, l.l_d, l.l_g, l.l_t, cfg.lr_d);
    if (on_step) on_step(step, l, models);
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
      save_gan(models, out_dir / ("gan_step" + std::to_string(step) + ".ckpt"));
  }
  save_gan(models, out_dir / "gan.ckpt");
  recognizer::save_recognizer(models.task, vocab, out_dir / "task.ckpt");
  return result;
}

}  // namespace fgan::trainer
