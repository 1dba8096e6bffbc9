#include "fgan/recognizer/recognizer.hpp"

#include <cmath>
#include <json.hpp>

#include "fgan/core/checkpoint.hpp"

namespace fgan::recognizer {

using corpus::Vocabulary;

double task_loss(const std::vector<TokenDistribution>& preds, const std::vector<int>& truth, int pad_id) {
  if (preds.size() != truth.size())
    throw LengthMismatch(std::to_string(preds.size()) + " predictions for " + std::to_string(truth.size()) + " targets");
  double loss = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (truth[t] == pad_id) continue;
    if (truth[t] < 0 || truth[t] >= static_cast<int>(preds[t].size()))
      throw ShapeMismatch("task_loss: target id outside the distribution");
    loss -= std::log(preds[t][truth[t]]);
  }
  return loss;
}

RecognizerConfig RecognizerConfig::small_preset(int vocab_size) {
  RecognizerConfig c;
  c.encoder = DenseNetConfig::small_preset();
  c.decoder.vocab_size = vocab_size;
  return c;
}

RecognizerConfig RecognizerConfig::large_preset(int vocab_size) {
  RecognizerConfig c;
  c.encoder = DenseNetConfig::large_preset();
  c.decoder = {vocab_size, 256, 512, 256};
  return c;
}

RecognizerConfig RecognizerConfig::compact_preset(int vocab_size) {
  RecognizerConfig c;
  c.encoder = DenseNetConfig::small_preset();
  c.decoder = {vocab_size, 64, 96, 64};
  return c;
}

std::string RecognizerConfig::to_json() const {
  const nlohmann::json j = {
      {"encoder",
       {{"num_blocks", encoder.num_blocks},
        {"layers_per_block", encoder.layers_per_block},
        {"growth_rate", encoder.growth_rate},
        {"multiscale", encoder.multiscale}}},
      {"decoder",
       {{"vocab_size", decoder.vocab_size},
        {"embed_dim", decoder.embed_dim},
        {"hidden_dim", decoder.hidden_dim},
        {"attention_dim", decoder.attention_dim}}},
      {"max_len", max_len},
  };
  return j.dump();
}

RecognizerConfig RecognizerConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RecognizerConfig c;
    const auto& e = j.at("encoder");
    c.encoder = {e.at("num_blocks").get<int>(), e.at("layers_per_block").get<int>(), e.at("growth_rate").get<int>(),
                 e.at("multiscale").get<bool>()};
    const auto& d = j.at("decoder");
    c.decoder = {d.at("vocab_size").get<int>(), d.at("embed_dim").get<int>(), d.at("hidden_dim").get<int>(),
                 d.at("attention_dim").get<int>()};
    c.max_len = j.value("max_len", 200);
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("recognizer config: ") + ex.what());
  }
}

std::vector<int> decoder_targets(const std::vector<int>& ids, int length) {
  if (static_cast<int>(ids.size()) + 1 > length) throw LengthMismatch("target longer than the decoding horizon");
  std::vector<int> out(ids);
  out.push_back(Vocabulary::kEnd);
  out.resize(length, Vocabulary::kPad);
  return out;
}

Recognizer::Recognizer(const RecognizerConfig& cfg, Rng& rng)
    : cfg_(cfg), encoder_(cfg.encoder, rng), decoder_(cfg.decoder, encoder_.output_channels(), rng) {
  if (cfg.max_len < 1) throw ConfigError("recognizer: max_len must be >= 1");
  register_module("encoder", &encoder_);
  register_module("decoder", &decoder_);
}

std::vector<Var> Recognizer::encode(const Var& images) const { return encoder_.forward(images); }

EncodedBatch Recognizer::prepare(const Var& images) const { return decoder_.prepare(encode(images)); }

TeacherForcing Recognizer::teacher_force(const Var& images, const std::vector<std::vector<int>>& targets) const {
  const int B = images.dim(0);
  if (static_cast<int>(targets.size()) != B)
    throw LengthMismatch(std::to_string(targets.size()) + " target sequences for a batch of " + std::to_string(B));
  std::size_t longest = 0;
  for (const auto& t : targets) longest = std::max(longest, t.size());
  const int T = static_cast<int>(longest) + 1;

  std::vector<std::vector<int>> padded;
  for (const auto& t : targets) padded.push_back(decoder_targets(t, T));

  const EncodedBatch enc = prepare(images);
  DecoderState state = decoder_.initial_state(enc, Vocabulary::kStart);
  TeacherForcing out;
  out.sequences = B;
  for (int t = 0; t < T; ++t) {
    StepOutput step = decoder_.step(state, enc);
    std::vector<int> truth(B);
    for (int b = 0; b < B; ++b) {
      truth[b] = padded[b][t];
      if (truth[b] != Vocabulary::kPad) ++out.tokens;
    }
    const Var ce = ops::cross_entropy_sum(step.logits, truth, Vocabulary::kPad);
    out.loss_sum = out.loss_sum ? ops::add(out.loss_sum, ce) : ce;
    state = std::move(step.state);
    state.prev_tokens = truth;  // PAD after END is harmless: those positions are masked
  }
  return out;
}

Var Recognizer::loss(const Var& images, const std::vector<std::vector<int>>& targets) const {
  const TeacherForcing tf = teacher_force(images, targets);
  return ops::scale(tf.loss_sum, 1.0 / tf.sequences);
}

std::vector<TokenDistribution> Recognizer::distributions(const Var& image, const std::vector<int>& target) const {
  const int T = static_cast<int>(target.size()) + 1;
  const std::vector<int> truth = decoder_targets(target, T);
  const EncodedBatch enc = prepare(image);
  DecoderState state = decoder_.initial_state(enc, Vocabulary::kStart);
  std::vector<TokenDistribution> out;
  for (int t = 0; t < T; ++t) {
    StepOutput step = decoder_.step(state, enc);
    const Tensor p = ops::softmax_last(step.logits).value();
    out.emplace_back(p.data(), p.data() + p.size());
    state = std::move(step.state);
    state.prev_tokens = {truth[t]};
  }
  return out;
}

RecognizerScorer::RecognizerScorer(const Recognizer& model, const Var& image) : model_(model) {
  if (image.dim(0) != 1) throw ShapeMismatch("scorer decodes one image at a time");
  enc_ = model.prepare(image);
  initial_hidden_ = model.decoder().initial_state(enc_, Vocabulary::kStart).hidden;
}

int RecognizerScorer::vocab_size() const { return model_.config().decoder.vocab_size; }

std::vector<std::vector<double>> RecognizerScorer::next_log_probs(const std::vector<std::vector<int>>& prefixes,
                                                                  const std::vector<int>& parents) {
  const int n = static_cast<int>(prefixes.size());
  if (static_cast<int>(parents.size()) != n) throw ShapeMismatch("scorer: one parent per prefix");
  DecoderState state;
  if (parents.front() < 0) {
    state.hidden = select_rows(initial_hidden_, std::vector<int>(n, 0));
  } else {
    state.hidden = select_rows(hidden_, parents);
  }
  for (const auto& p : prefixes) state.prev_tokens.push_back(p.back());
  StepOutput step = model_.decoder().step(state, enc_.select(std::vector<int>(n, 0)));
  hidden_ = step.state.hidden;
  const Tensor lp = ops::log_softmax_last(step.logits).value();
  const int V = lp.dim(1);
  std::vector<std::vector<double>> rows(n);
  for (int i = 0; i < n; ++i) rows[i].assign(lp.data() + static_cast<std::size_t>(i) * V, lp.data() + static_cast<std::size_t>(i + 1) * V);
  return rows;
}

namespace {

BeamOptions options(const RecognizerConfig& cfg, int beam_size, int max_len) {
  return {beam_size, max_len > 0 ? max_len : cfg.max_len, Vocabulary::kStart, Vocabulary::kEnd};
}

}  // namespace

BeamHypothesis Recognizer::greedy(const image::GrayImage& img, int max_len) const {
  NoGradGuard guard;
  RecognizerScorer scorer(*this, constant(image::to_tensor(img)));
  return greedy_decode(scorer, options(cfg_, 1, max_len));
}

BeamHypothesis Recognizer::beam_search(const image::GrayImage& img, int beam_size, int max_len) const {
  NoGradGuard guard;
  RecognizerScorer scorer(*this, constant(image::to_tensor(img)));
  return recognizer::beam_search(scorer, options(cfg_, beam_size, max_len));
}

namespace {

std::string archive_config(const RecognizerConfig& cfg, const Vocabulary& vocab) {
  nlohmann::json tokens = nlohmann::json::array();
  for (int id = Vocabulary::kNumSpecial; id < vocab.size(); ++id) tokens.push_back(vocab.token(id));
  return nlohmann::json{{"model", nlohmann::json::parse(cfg.to_json())}, {"vocabulary", tokens}}.dump();
}

}  // namespace

void save_recognizer(const Recognizer& model, const Vocabulary& vocab, const std::filesystem::path& path) {
  if (vocab.size() != model.config().decoder.vocab_size)
    throw CheckpointMismatch("vocabulary size differs from the model's output size");
  CheckpointArchive archive{kRecognizerKind, archive_config(model.config(), vocab), {}};
  collect_arrays(archive, "recognizer", model);
  write_checkpoint(archive, path);
}

LoadedRecognizer load_recognizer(const std::filesystem::path& path) {
  const CheckpointArchive archive = read_checkpoint(path);
  if (archive.kind != kRecognizerKind)
    throw CheckpointMismatch(path.string() + " holds a '" + archive.kind + "' checkpoint, expected a recognizer");
  LoadedRecognizer out;
  try {
    const auto j = nlohmann::json::parse(archive.config);
    const RecognizerConfig cfg = RecognizerConfig::from_json(j.at("model").dump());
    out.vocabulary = Vocabulary::from_tokens(j.at("vocabulary").get<std::vector<std::string>>());
    Rng rng(0);
    out.model = std::make_unique<Recognizer>(cfg, rng);
  } catch (const nlohmann::json::exception& ex) {
    throw CheckpointMismatch(std::string("recognizer checkpoint config: ") + ex.what());
  }
  restore_arrays(archive, "recognizer", *out.model);
  out.model->set_training(false);
  return out;
}

void load_recognizer_into(Recognizer& model, const std::filesystem::path& path) {
  const CheckpointArchive archive = read_checkpoint(path);
  if (archive.kind != kRecognizerKind) throw CheckpointMismatch("expected a recognizer checkpoint");
  const auto j = nlohmann::json::parse(archive.config);
  if (RecognizerConfig::from_json(j.at("model").dump()).to_json() != model.config().to_json())
    throw CheckpointMismatch("recognizer configuration differs from the checkpoint");
  restore_arrays(archive, "recognizer", model);
}

}  // namespace fgan::recognizer
