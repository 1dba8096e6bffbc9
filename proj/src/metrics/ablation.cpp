#include "fgan/metrics/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fgan/image/render.hpp"
#include "fgan/metrics/metrics.hpp"
#include "fgan/trainer/gan_trainer.hpp"
#include "fgan/trainer/rec_trainer.hpp"
#include "fgan/trainer/synthesis.hpp"

namespace fgan::metrics {

using nlohmann::json;

void AblationConfig::validate() const {
  if (variants.empty()) throw ConfigError("ablation needs at least one variant");
  if (iterations.empty()) throw ConfigError("ablation needs at least one evaluation iteration");
  for (std::size_t i = 0; i < iterations.size(); ++i)
    if (iterations[i] < 1 || (i > 0 && iterations[i] <= iterations[i - 1]))
      throw ConfigError("ablation iterations must be positive and strictly increasing");
  if (train_records.empty()) throw trainer::EmptyDataset("ablation has no training formulas");
  if (heldout_records.empty()) throw trainer::EmptyDataset("ablation has no held-out formulas");
  for (const auto& v : variants) v.gan.validate();
  synthesis.validate();
  recognizer.validate();
}

AblationConfig desk_ablation_config(std::uint64_t seed) {
  AblationConfig c;
  c.seed = seed;
  c.synthesis.height = 32;
  c.synthesis.seed = derive_seed(seed, "synthesis");
  c.recognizer.preset = "compact";
  c.recognizer.normalize_mode = trainer::NormalizeMode::SymbolHeight;
  c.recognizer.symbol_height = 16;
  c.recognizer.lr = 1e-3;
  c.recognizer.clip_norm = 5;
  c.recognizer.max_steps = 200;
  c.recognizer.steps_per_epoch = 100;
  c.recognizer.bn_batches = 8;
  c.recognizer.seed = derive_seed(seed, "recognizer");
  return c;
}

trainer::GANTrainConfig desk_gan_config(std::uint64_t seed) {
  trainer::GANTrainConfig g;
  g.model_preset = "tiny";
  g.task_preset = "compact";
  g.input_height = 32;
  g.max_width = 128;
  g.batch_size = 2;
  g.seed = seed;
  return g;
}

std::vector<AblationVariant> lambda_variants(const trainer::GANTrainConfig& base, const std::vector<double>& lambdas) {
  std::vector<AblationVariant> out;
  for (double lambda : lambdas) {
    std::ostringstream name;
    name << "lambda=" << lambda;
    AblationVariant v{name.str(), base};
    v.gan.lambda = lambda;
    out.push_back(std::move(v));
  }
  return out;
}

trainer::Dataset handwritten_heldout(const std::vector<corpus::FormulaRecord>& records, const corpus::Vocabulary& vocab,
                                     const trainer::RecTrainConfig& rec, std::uint64_t seed) {
  trainer::Dataset ds{"heldout", {}};
  for (const auto& r : records) {
    Rng rng(derive_seed(seed, r.id));
    const auto img = trainer::normalize_for_recognition(image::render_handwritten(r.source_latex, rng), r.source_latex,
                                                        rec.normalize_mode, rec.symbol_height, rec.max_width);
    if (img) ds.samples.push_back({r.id, r.source_latex, *img, vocab.encode(r.tokens), DomainLabel::Handwritten});
  }
  if (ds.samples.empty()) throw trainer::EmptyDataset("no held-out formula survived normalization");
  return ds;
}

AblationTable ablation_run(const AblationConfig& cfg, const corpus::Vocabulary& vocab,
                           const image::RendererBackend& renderer) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const trainer::Dataset heldout = handwritten_heldout(cfg.heldout_records, vocab, cfg.recognizer, derive_seed(cfg.seed, "heldout"));

  AblationTable table;
  table.iterations = cfg.iterations;
  table.metadata = {{"seed", cfg.seed},
                    {"iterations", cfg.iterations},
                    {"train_formulas", cfg.train_records.size()},
                    {"heldout_formulas", heldout.samples.size()},
                    {"synthesis", json::parse(trainer::to_json(cfg.synthesis))},
                    {"recognizer", json::parse(trainer::to_json(cfg.recognizer))},
                    {"variants", json::array()}};

  for (const auto& variant : cfg.variants) {
    const auto vdir = cfg.out_dir / variant.name;
    trainer::GANTrainConfig gcfg = variant.gan;
    gcfg.max_iterations = cfg.iterations.back();
    gcfg.checkpoint_every = 0;
    const trainer::GanDataset data = trainer::build_gan_dataset(cfg.train_records, vocab, renderer, gcfg);

    std::vector<std::filesystem::path> checkpoints;
    trainer::train_gan(gcfg, data, vocab, vdir / "gan", [&](int step, const gan::GANLosses&, const trainer::GanModels& m) {
      if (std::find(cfg.iterations.begin(), cfg.iterations.end(), step) == cfg.iterations.end()) return;
      checkpoints.push_back(vdir / "gan" / ("gan_step" + std::to_string(step) + ".ckpt"));
      trainer::save_gan(m, checkpoints.back());
    });

    std::vector<double> row;
    for (std::size_t i = 0; i < cfg.iterations.size(); ++i) {
      const auto cell = vdir / ("iter" + std::to_string(cfg.iterations[i]));
      trainer::SynthesisConfig scfg = cfg.synthesis;
      scfg.output_dir = cell / "synth";
      trainer::synthesize_dataset(checkpoints[i], cfg.train_records, vocab, scfg, renderer);
      trainer::Dataset synth = trainer::load_dataset(scfg.output_dir, cfg.recognizer.normalize_mode,
                                                     cfg.recognizer.symbol_height, cfg.recognizer.max_width);
      synth.name = "synthesized";

      Rng rng(cfg.recognizer.seed);
      recognizer::Recognizer model(trainer::task_preset(cfg.recognizer.preset, vocab.size()), rng);
      trainer::train_recognizer(model, {synth}, trainer::Dataset{}, cfg.recognizer, vocab, cell / "recognizer");
      model.set_training(false);
      row.push_back(perplexity(model, heldout));
    }
    table.variants.push_back(variant.name);
    table.perplexity.push_back(std::move(row));
    table.metadata["variants"].push_back({{"name", variant.name}, {"gan", json::parse(trainer::to_json(gcfg))}});
  }
  write_ablation(table, cfg.out_dir);
  return table;
}

void write_ablation(const AblationTable& table, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json rows = json::array();
  for (std::size_t v = 0; v < table.variants.size(); ++v)
    rows.push_back({{"variant", table.variants[v]}, {"perplexity", table.perplexity[v]}});
  const json doc{{"iterations", table.iterations}, {"rows", rows}, {"metadata", table.metadata}};
  std::ofstream(dir / "ablation.json") << doc.dump(2) << "\n";

  std::ofstream csv(dir / "ablation.csv");
  if (!csv) throw IoError("cannot write " + (dir / "ablation.csv").string());
  csv << "variant,iteration,perplexity\n" << std::setprecision(10);
  for (std::size_t v = 0; v < table.variants.size(); ++v)
    for (std::size_t i = 0; i < table.iterations.size(); ++i)
      csv << table.variants[v] << ',' << table.iterations[i] << ',' << table.perplexity[v][i] << '\n';
}

std::string format_ablation(const AblationTable& table) {
  std::ostringstream s;
  s << std::left << std::setw(16) << "variant";
  for (int it : table.iterations) s << std::right << std::setw(12) << ("@" + std::to_string(it));
  s << '\n' << std::fixed << std::setprecision(3);
  for (std::size_t v = 0; v < table.variants.size(); ++v) {
    s << std::left << std::setw(16) << table.variants[v];
    for (double p : table.perplexity[v]) s << std::right << std::setw(12) << p;
    s << '\n';
  }
  return s.str();
}

}  // namespace fgan::metrics
