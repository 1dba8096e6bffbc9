#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "fgan/core/optim.hpp"
#include "fgan/gan/losses.hpp"
#include "fgan/gan/networks.hpp"
#include "fgan/recognizer/recognizer.hpp"
#include "fgan/trainer/data.hpp"

namespace fgan::trainer {

FGAN_DEFINE_ERROR(NonFiniteLoss);
FGAN_DEFINE_ERROR(FilterViolation);

inline constexpr const char* kGanKind = "gan";

gan::GanConfig gan_preset(const std::string& name);
recognizer::RecognizerConfig task_preset(const std::string& name, int vocab_size);

/// Generator, discriminator and the task model that reads generated images.
struct GanModels {
  GanModels(const gan::GanConfig& gan_cfg, const recognizer::RecognizerConfig& task_cfg, Rng& rng);

  gan::GanConfig config;
  gan::Generator generator;
  gan::Discriminator discriminator;
  recognizer::Recognizer task;
};

/// The discriminator optimizer also owns the task model's parameters: both are updated in
/// the discriminator phase and nowhere else.
struct GanOptimizers {
  GanOptimizers(GanModels& models, const GANTrainConfig& cfg);
  Adam d;
  Adam g;
};

/// Source images with their labels and the target domain for each, plus real images of the
/// target domains for the discriminator.
struct GanBatch {
  std::vector<Sample> sources;
  std::vector<DomainLabel> targets;
  std::vector<Sample> reals;
};

/// Rendered and handwritten pools at the training height.
struct GanDataset {
  std::vector<Sample> rendered;
  std::vector<Sample> handwritten;
  std::size_t skipped_tokens = 0;
  std::size_t skipped_width = 0;
  std::size_t skipped_render = 0;
};

/// Renders every record in both domains and keeps the images that pass the training filters.
GanDataset build_gan_dataset(const std::vector<corpus::FormulaRecord>& records, const corpus::Vocabulary& vocab,
                             const image::RendererBackend& renderer, const GANTrainConfig& cfg);

GanBatch sample_gan_batch(const GanDataset& data, const GANTrainConfig& cfg, Rng& rng);

/// Task-model parameter hashes around the two phases of one step.
struct StepProbe {
  std::uint64_t task_before = 0;
  std::uint64_t task_after_d = 0;
  std::uint64_t task_after_g = 0;
  std::uint64_t task_buffers_after_d = 0;
  std::uint64_t task_buffers_after_g = 0;
};

/// One discriminator update on L_D + lambda L_T, then one generator update on L_G + lambda L_T.
/// Generated images are masked to background beyond each source's width. The task model trains
/// on detached generated images (and real ones when task_sees_real) in the first phase only;
/// in the second phase it is evaluated in inference mode and its gradients are discarded.
/// Reported l_t is the first-phase task loss; l_dt and l_gt are the objectives each phase minimized.
gan::GANLosses gan_train_step(const GanBatch& batch, GanModels& models, GanOptimizers& opt, const GANTrainConfig& cfg,
                              Rng& rng, StepProbe* probe = nullptr);

struct GanRunResult {
  std::vector<gan::GANLosses> history;
  std::size_t task_touched_in_g_phase = 0;  // steps whose G phase changed the task model (expected 0)
};

/// Runs cfg.max_iterations steps, writing config.resolved, metrics.csv, gan.ckpt and task.ckpt
/// (plus gan_step<N>.ckpt every checkpoint_every steps) into out_dir. on_step may be null.
GanRunResult train_gan(const GANTrainConfig& cfg, const GanDataset& data, const corpus::Vocabulary& vocab,
                       const std::filesystem::path& out_dir,
                       const std::function<void(int, const gan::GANLosses&, const GanModels&)>& on_step = {});

void save_gan(const GanModels& models, const std::filesystem::path& path);

/// Generator restored from a GAN checkpoint; the configuration comes from the archive.
struct LoadedGenerator {
  gan::GanConfig config;
  std::unique_ptr<gan::Generator> generator;
};
LoadedGenerator load_generator(const std::filesystem::path& path);

/// Seeded uniform hash over parameter values and buffers (running statistics, power-iteration vectors).
std::uint64_t buffer_hash(const Module& m);

}  // namespace fgan::trainer
