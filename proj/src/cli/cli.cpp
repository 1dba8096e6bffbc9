#include "fgan/cli/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>

#include "fgan/corpus/record.hpp"
#include "fgan/corpus/vocabulary.hpp"
#include "fgan/image/render.hpp"
#include "fgan/metrics/ablation.hpp"
#include "fgan/metrics/metrics.hpp"
#include "fgan/metrics/sample_grid.hpp"
#include "fgan/trainer/gan_trainer.hpp"
#include "fgan/trainer/rec_trainer.hpp"
#include "fgan/trainer/synthesis.hpp"

namespace fgan::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string renderer = "stub";
  int workers = 1;
  std::string config;
  CLI::Option* seed_opt = nullptr;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// The --config file, or an empty object.
json config_file(const Globals& g) {
  if (g.config.empty()) return json::object();
  try {
    json j = json::parse(read_text(g.config));
    if (!j.is_object()) throw ConfigError(g.config + ": expected a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(g.config + ": " + e.what());
  }
}

std::vector<corpus::FormulaRecord> load_records(const std::string& path, int limit) {
  auto records = corpus::load_corpus_file(path.empty() ? corpus::bundled_corpus_path() : path).records;
  if (limit > 0 && static_cast<std::size_t>(limit) < records.size()) records.resize(static_cast<std::size_t>(limit));
  if (records.empty()) throw corpus::EmptyCorpus("no usable formulas in the corpus");
  return records;
}

// An explicit vocabulary file wins; otherwise the vocabulary is rebuilt from the full corpus.
corpus::Vocabulary resolve_vocabulary(const std::string& vocab_path, const std::string& corpus_path) {
  if (!vocab_path.empty()) return corpus::Vocabulary::load(vocab_path);
  return corpus::build_vocabulary(load_records(corpus_path, 0));
}

bool given(const CLI::Option* opt) { return opt && opt->count() > 0; }

template <class T>
void override_if(const CLI::Option* opt, T& field, const T& value) {
  if (given(opt)) field = value;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Handwritten formula synthesis with a self-attention GAN, and recognizer training"};
  app.require_subcommand(1);
  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Global random seed")->capture_default_str();
  app.add_option("--renderer", g.renderer, "stub | http (uses RENDER_URL) | http:<url>")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads for data preparation")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "JSON file with configuration keys; flags override it")
      ->check(CLI::ExistingFile);
  app.fallthrough();

  // prepare-data
  auto* prep = app.add_subcommand("prepare-data", "Render a corpus into a dataset directory");
  std::string prep_corpus, prep_out, prep_domain = "rendered";
  int prep_limit = 0;
  bool prep_fixed_font = false;
  prep->add_option("--corpus", prep_corpus, "Corpus file, one LaTeX formula per line (default: bundled)");
  prep->add_option("--out", prep_out, "Output dataset directory")->required();
  prep->add_option("--domain", prep_domain, "rendered | handwritten")->check(CLI::IsMember({"rendered", "handwritten"}));
  prep->add_option("--limit", prep_limit, "Use only the first N formulas");
  prep->add_flag("--fixed-font", prep_fixed_font, "Render with default parameters instead of sampling them");

  // train-gan
  auto* tg = app.add_subcommand("train-gan", "Train the generator, discriminator and task model");
  std::string tg_corpus, tg_out, tg_vocab, tg_preset;
  int tg_limit = 0, tg_iters = 0, tg_batch = 0, tg_height = 0, tg_every = 0;
  double tg_lambda = 0;
  tg->add_option("--corpus", tg_corpus, "Corpus file (default: bundled)");
  tg->add_option("--vocab", tg_vocab, "Vocabulary file (default: built from the corpus)");
  tg->add_option("--out", tg_out, "Run directory")->required();
  tg->add_option("--limit", tg_limit, "Use only the first N formulas");
  auto* tg_iters_opt = tg->add_option("--iterations", tg_iters, "Training iterations");
  auto* tg_lambda_opt = tg->add_option("--lambda", tg_lambda, "Task loss weight");
  auto* tg_batch_opt = tg->add_option("--batch-size", tg_batch, "Batch size");
  auto* tg_height_opt = tg->add_option("--height", tg_height, "Input height (multiple of 16)");
  auto* tg_preset_opt = tg->add_option("--preset", tg_preset, "default | tiny");
  auto* tg_every_opt = tg->add_option("--checkpoint-every", tg_every, "Extra checkpoint interval");

  // synthesize
  auto* syn = app.add_subcommand("synthesize", "Translate rendered formulas into the target domain");
  std::string syn_ckpt, syn_corpus, syn_out, syn_vocab, syn_target;
  int syn_limit = 0, syn_height = 0;
  std::size_t syn_area = 0;
  bool syn_fixed_font = false;
  syn->add_option("--checkpoint", syn_ckpt, "GAN checkpoint")->required()->check(CLI::ExistingFile);
  syn->add_option("--corpus", syn_corpus, "Corpus file (default: bundled)");
  syn->add_option("--vocab", syn_vocab, "Vocabulary file (default: built from the corpus)");
  auto* syn_out_opt = syn->add_option("--out", syn_out, "Output dataset directory");
  syn->add_option("--limit", syn_limit, "Use only the first N formulas");
  auto* syn_height_opt = syn->add_option("--height", syn_height, "Synthesis height (multiple of 16)");
  auto* syn_area_opt = syn->add_option("--max-area", syn_area, "Keep images with height*width below this");
  auto* syn_target_opt =
      syn->add_option("--target", syn_target, "handwritten | rendered")->check(CLI::IsMember({"rendered", "handwritten"}));
  auto* syn_fixed_opt = syn->add_flag("--fixed-font", syn_fixed_font, "Do not sample fonts and sizes");

  // train-recognizer
  auto* tr = app.add_subcommand("train-recognizer", "Train the recognizer on a mixture of datasets");
  std::vector<std::string> tr_data;
  std::string tr_val, tr_out, tr_vocab, tr_preset, tr_normalize;
  int tr_steps = 0, tr_symbol = 0;
  double tr_lr = 0;
  tr->add_option("--data", tr_data, "Dataset directory; repeat to mix sources equally")->required();
  tr->add_option("--val", tr_val, "Validation dataset directory (default: first --data)");
  tr->add_option("--vocab", tr_vocab, "Vocabulary file (default: <first data>/vocab.txt)");
  tr->add_option("--out", tr_out, "Run directory")->required();
  auto* tr_steps_opt = tr->add_option("--steps", tr_steps, "Maximum optimizer steps");
  auto* tr_lr_opt = tr->add_option("--lr", tr_lr, "Initial learning rate");
  auto* tr_preset_opt = tr->add_option("--preset", tr_preset, "small | large | compact");
  auto* tr_norm_opt = tr->add_option("--normalize", tr_normalize, "height-128 | symbol-height")
                          ->check(CLI::IsMember({"height-128", "symbol-height"}));
  auto* tr_symbol_opt = tr->add_option("--symbol-height", tr_symbol, "Glyph height for symbol-height mode");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score predictions, or decode a dataset with a recognizer");
  std::string ev_pred, ev_truth, ev_ckpt, ev_data, ev_out = "eval", ev_normalize = "both";
  int ev_beam = 10, ev_symbol = 32;
  auto* ev_pred_opt = ev->add_option("--pred", ev_pred, "Predictions (JSON lines with id and tokens)");
  auto* ev_truth_opt = ev->add_option("--truth", ev_truth, "Truth manifest.jsonl or dataset directory");
  auto* ev_ckpt_opt = ev->add_option("--checkpoint", ev_ckpt, "Recognizer checkpoint");
  auto* ev_data_opt = ev->add_option("--data", ev_data, "Dataset directory to decode");
  ev->add_option("--out", ev_out, "Directory for report.csv, report.txt and predictions");
  ev->add_option("--beam", ev_beam, "Beam size")->check(CLI::PositiveNumber);
  ev->add_option("--normalize", ev_normalize, "both | height-128 | symbol-height")
      ->check(CLI::IsMember({"both", "height-128", "symbol-height"}));
  ev->add_option("--symbol-height", ev_symbol, "Glyph height for symbol-height mode");
  ev_pred_opt->needs(ev_truth_opt);
  ev_truth_opt->needs(ev_pred_opt);
  ev_ckpt_opt->needs(ev_data_opt);
  ev_data_opt->needs(ev_ckpt_opt);
  ev_pred_opt->excludes(ev_ckpt_opt);

  // ablate
  auto* ab = app.add_subcommand("ablate", "Desk-scale ablation: perplexity per variant and GAN iteration");
  std::string ab_corpus, ab_out, ab_vocab;
  std::vector<int> ab_iters{50, 100};
  std::vector<double> ab_lambdas{0.0, 1.0};
  int ab_train = 16, ab_heldout = 16, ab_rec_steps = 0;
  ab->add_option("--corpus", ab_corpus, "Corpus file (default: bundled)");
  ab->add_option("--vocab", ab_vocab, "Vocabulary file (default: built from the corpus)");
  ab->add_option("--out", ab_out, "Output directory")->required();
  ab->add_option("--iterations", ab_iters, "GAN iterations at which to evaluate")->delimiter(',')->capture_default_str();
  ab->add_option("--lambdas", ab_lambdas, "One variant per task-loss weight")->delimiter(',')->capture_default_str();
  ab->add_option("--train-formulas", ab_train, "Formulas used for GAN training and synthesis")->capture_default_str();
  ab->add_option("--heldout", ab_heldout, "Held-out formulas for perplexity")->capture_default_str();
  auto* ab_steps_opt = ab->add_option("--rec-steps", ab_rec_steps, "Recognizer steps per cell");

  // sample-grid
  auto* sg = app.add_subcommand("sample-grid", "Side-by-side grid of rendered inputs and generator outputs");
  std::string sg_ckpt, sg_out, sg_corpus, sg_target = "handwritten";
  std::vector<std::string> sg_formulas;
  int sg_count = 4;
  metrics::GridOptions grid;
  sg->add_option("--checkpoint", sg_ckpt, "GAN checkpoint")->required()->check(CLI::ExistingFile);
  sg->add_option("--out", sg_out, "Output PNG")->required();
  sg->add_option("--formula", sg_formulas, "LaTeX formula; repeat for more rows");
  sg->add_option("--corpus", sg_corpus, "Take formulas from this corpus when --formula is absent");
  sg->add_option("--count", sg_count, "Rows taken from the corpus")->capture_default_str();
  sg->add_option("--height", grid.height, "Row height (multiple of 16)")->capture_default_str();
  sg->add_option("--gutter", grid.gutter, "Pixels between columns and rows")->capture_default_str();
  sg->add_option("--target", sg_target, "handwritten | rendered")->check(CLI::IsMember({"rendered", "handwritten"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    const json file = config_file(g);
    // A file may hold one flat section or several named ones ("gan", "recognizer", "synthesis").
    const bool sectioned = file.contains("gan") || file.contains("recognizer") || file.contains("synthesis");
    auto section = [&](const char* key) {
      if (file.contains(key)) return file.at(key).dump();
      return sectioned ? std::string("{}") : file.dump();
    };

    if (*prep) {
      const auto records = load_records(prep_corpus, prep_limit);
      const auto renderer = image::make_renderer(g.renderer);
      const corpus::Vocabulary vocab = corpus::build_vocabulary(load_records(prep_corpus, 0));
      const DomainLabel domain = prep_domain == "handwritten" ? DomainLabel::Handwritten : DomainLabel::Rendered;
      const auto rep = trainer::prepare_dataset(records, vocab, domain, *renderer, prep_out, g.seed, g.workers, !prep_fixed_font);
      vocab.save(fs::path(prep_out) / "vocab.txt");
      out << "wrote " << rep.written << " images to " << prep_out << " (" << rep.failed << " failed to render)\n";
      return rep.written > 0 ? kExitOk : kExitDomainError;
    }

    if (*tg) {
      trainer::GANTrainConfig cfg;
      trainer::merge_json(cfg, section("gan"));
      override_if(g.seed_opt, cfg.seed, g.seed);
      override_if(tg_iters_opt, cfg.max_iterations, tg_iters);
      override_if(tg_lambda_opt, cfg.lambda, tg_lambda);
      override_if(tg_batch_opt, cfg.batch_size, tg_batch);
      override_if(tg_height_opt, cfg.input_height, tg_height);
      override_if(tg_preset_opt, cfg.model_preset, tg_preset);
      override_if(tg_every_opt, cfg.checkpoint_every, tg_every);
      cfg.validate();
      const auto records = load_records(tg_corpus, tg_limit);
      const corpus::Vocabulary vocab = resolve_vocabulary(tg_vocab, tg_corpus);
      const auto renderer = image::make_renderer(g.renderer);
      const auto data = trainer::build_gan_dataset(records, vocab, *renderer, cfg);
      out << "GAN data: " << data.rendered.size() << " rendered, " << data.handwritten.size() << " handwritten ("
          << data.skipped_tokens << " over the token limit, " << data.skipped_width << " too wide)\n";
      const auto result = trainer::train_gan(cfg, data, vocab, tg_out);
      vocab.save(fs::path(tg_out) / "vocab.txt");
      const auto& last = result.history.empty() ? gan::GANLosses{} : result.history.back();
      out << "trained " << result.history.size() << " iterations; last l_d=" << last.l_d << " l_g=" << last.l_g
          << " l_t=" << last.l_t << "; checkpoint " << (fs::path(tg_out) / "gan.ckpt").string() << "\n";
      return kExitOk;
    }

    if (*syn) {
      trainer::SynthesisConfig cfg;
      trainer::merge_json(cfg, section("synthesis"));
      override_if(g.seed_opt, cfg.seed, g.seed);
      override_if(syn_height_opt, cfg.height, syn_height);
      override_if(syn_area_opt, cfg.max_pixel_area, syn_area);
      override_if(syn_out_opt, cfg.output_dir, fs::path(syn_out));
      if (given(syn_target_opt)) cfg.target = syn_target == "handwritten" ? DomainLabel::Handwritten : DomainLabel::Rendered;
      if (given(syn_fixed_opt)) cfg.sample_fonts = !syn_fixed_font;
      const auto records = load_records(syn_corpus, syn_limit);
      const corpus::Vocabulary vocab = resolve_vocabulary(syn_vocab, syn_corpus);
      const auto renderer = image::make_renderer(g.renderer);
      const auto rep = trainer::synthesize_dataset(syn_ckpt, records, vocab, cfg, *renderer);
      vocab.save(cfg.output_dir / "vocab.txt");
      out << "synthesized " << rep.written << " images (" << rep.skipped_area << " over the area limit, "
          << rep.skipped_render << " failed to render) into " << cfg.output_dir.string() << "\n";
      return kExitOk;
    }

    if (*tr) {
      trainer::RecTrainConfig cfg;
      trainer::merge_json(cfg, section("recognizer"));
      override_if(g.seed_opt, cfg.seed, g.seed);
      override_if(tr_steps_opt, cfg.max_steps, tr_steps);
      override_if(tr_lr_opt, cfg.lr, tr_lr);
      override_if(tr_preset_opt, cfg.preset, tr_preset);
      override_if(tr_symbol_opt, cfg.symbol_height, tr_symbol);
      if (given(tr_norm_opt)) cfg.normalize_mode = trainer::parse_normalize_mode(tr_normalize);
      cfg.validate();
      const fs::path vocab_path = tr_vocab.empty() ? fs::path(tr_data.front()) / "vocab.txt" : fs::path(tr_vocab);
      const corpus::Vocabulary vocab = corpus::Vocabulary::load(vocab_path);
      std::vector<trainer::Dataset> mix;
      for (const auto& dir : tr_data)
        mix.push_back(trainer::load_dataset(dir, cfg.normalize_mode, cfg.symbol_height, cfg.max_width));
      trainer::Dataset val;
      if (!tr_val.empty()) val = trainer::load_dataset(tr_val, cfg.normalize_mode, cfg.symbol_height, cfg.max_width);
      const auto result = trainer::train_recognizer(mix, val, cfg, vocab, tr_out);
      out << "trained " << result.steps << " steps over " << result.epochs.size() << " epochs; best validation ExpRate "
          << result.best_exprate << "% (" << result.lr_reductions << " learning-rate reductions); checkpoint "
          << result.best_checkpoint.string() << "\n";
      return kExitOk;
    }

    if (*ev) {
      fs::create_directories(ev_out);
      std::vector<std::pair<std::string, metrics::EvalReport>> rows;
      if (given(ev_pred_opt)) {
        const auto pairs = metrics::match_predictions(metrics::read_predictions(ev_pred), ev_truth);
        rows.emplace_back("predictions", metrics::score_pairs(pairs));
      } else if (given(ev_ckpt_opt)) {
        const auto loaded = recognizer::load_recognizer(ev_ckpt);
        loaded.model->set_training(false);
        std::vector<trainer::NormalizeMode> modes;
        if (ev_normalize != "symbol-height") modes.push_back(trainer::NormalizeMode::Height128);
        if (ev_normalize != "height-128") modes.push_back(trainer::NormalizeMode::SymbolHeight);
        for (auto mode : modes) {
          const auto data = trainer::load_dataset(ev_data, mode, ev_symbol, 0);
          const auto preds = metrics::predict(*loaded.model, loaded.vocabulary, data, ev_beam);
          const std::string name = trainer::normalize_mode_name(mode);
          metrics::write_predictions(preds, fs::path(ev_out) / ("predictions_" + name + ".jsonl"));
          metrics::EvalReport r = metrics::score_pairs(metrics::match_predictions(preds, ev_data));
          r.perplexity = metrics::perplexity(*loaded.model, data);
          rows.emplace_back(name, r);
        }
      } else {
        throw CLI::RequiredError("evaluate needs either --pred with --truth, or --checkpoint with --data");
      }
      metrics::write_report_csv(rows, fs::path(ev_out) / "report.csv");
      std::ofstream txt(fs::path(ev_out) / "report.txt");
      for (const auto& [name, r] : rows) {
        out << metrics::format_report(name, r) << "\n";
        txt << metrics::format_report(name, r) << "\n";
      }
      return kExitOk;
    }

    if (*ab) {
      metrics::AblationConfig cfg = metrics::desk_ablation_config(g.seed);
      trainer::GANTrainConfig base = metrics::desk_gan_config(g.seed);
      if (file.contains("gan")) trainer::merge_json(base, file.at("gan").dump());
      if (file.contains("recognizer")) trainer::merge_json(cfg.recognizer, file.at("recognizer").dump());
      if (file.contains("synthesis")) trainer::merge_json(cfg.synthesis, file.at("synthesis").dump());
      for (const auto& [key, value] : file.items())
        if (key != "gan" && key != "recognizer" && key != "synthesis")
          throw ConfigError("ablation config: unknown key '" + key + "'");
      override_if(ab_steps_opt, cfg.recognizer.max_steps, ab_rec_steps);
      const auto records = load_records(ab_corpus, 0);
      if (ab_train < 1 || ab_heldout < 1 || static_cast<std::size_t>(ab_train + ab_heldout) > records.size())
        throw ConfigError("--train-formulas plus --heldout must fit in the corpus");
      cfg.train_records.assign(records.begin(), records.begin() + ab_train);
      cfg.heldout_records.assign(records.end() - ab_heldout, records.end());
      cfg.variants = metrics::lambda_variants(base, ab_lambdas);
      cfg.iterations = ab_iters;
      cfg.out_dir = ab_out;
      const corpus::Vocabulary vocab = resolve_vocabulary(ab_vocab, ab_corpus);
      const auto renderer = image::make_renderer(g.renderer);
      const auto table = metrics::ablation_run(cfg, vocab, *renderer);
      out << metrics::format_ablation(table);
      return kExitOk;
    }

    if (*sg) {
      if (sg_formulas.empty())
        for (const auto& r : load_records(sg_corpus, sg_count)) sg_formulas.push_back(r.source_latex);
      grid.seed = g.seed;
      grid.target = sg_target == "rendered" ? DomainLabel::Rendered : DomainLabel::Handwritten;
      const auto renderer = image::make_renderer(g.renderer);
      const auto layout = metrics::emit_sample_grid(sg_ckpt, sg_formulas, sg_out, *renderer, grid);
      out << "wrote " << sg_out << ": " << layout.rows << " rows x " << layout.cols << " columns, " << layout.width << "x"
          << layout.height << " px\n";
      return kExitOk;
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace fgan::cli
