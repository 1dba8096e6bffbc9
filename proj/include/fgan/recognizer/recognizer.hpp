#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "fgan/corpus/vocabulary.hpp"
#include "fgan/image/gray_image.hpp"
#include "fgan/recognizer/beam.hpp"
#include "fgan/recognizer/decoder.hpp"
#include "fgan/recognizer/densenet.hpp"

namespace fgan::recognizer {

FGAN_DEFINE_ERROR(LengthMismatch);

/// Probabilities over vocabulary ids for one output position.
using TokenDistribution = std::vector<double>;

/// -sum_t log p_t(truth_t), skipping positions whose truth is the pad id.
double task_loss(const std::vector<TokenDistribution>& preds, const std::vector<int>& truth,
                 int pad_id = corpus::Vocabulary::kPad);

struct RecognizerConfig {
  DenseNetConfig encoder;
  DecoderConfig decoder;
  int max_len = 200;

  /// Task model used inside GAN training.
  static RecognizerConfig small_preset(int vocab_size);
  /// Standalone recognizer: multiscale encoder, wider recurrent state.
  static RecognizerConfig large_preset(int vocab_size);
  /// Narrow decoder for CPU smoke runs; the encoder keeps the small layout.
  static RecognizerConfig compact_preset(int vocab_size);

  std::string to_json() const;
  static RecognizerConfig from_json(const std::string& text);
};

/// Summed teacher-forced cross-entropy over a batch.
struct TeacherForcing {
  Var loss_sum;        // scalar, sum over sequences and positions
  int tokens = 0;      // positions that contributed (END included, PAD excluded)
  int sequences = 0;
};

/// Decoder targets for one sequence: truth ids followed by END, padded with PAD to `length`.
std::vector<int> decoder_targets(const std::vector<int>& ids, int length);

class Recognizer : public Module {
 public:
  Recognizer(const RecognizerConfig& cfg, Rng& rng);

  std::vector<Var> encode(const Var& images) const;
  EncodedBatch prepare(const Var& images) const;

  /// Teacher forcing: step t consumes START (t = 0) or truth_{t-1} and predicts truth_t, then END.
  /// One target sequence per image; throws LengthMismatch otherwise.
  TeacherForcing teacher_force(const Var& images, const std::vector<std::vector<int>>& targets) const;
  /// Mean over sequences of the summed cross-entropy.
  Var loss(const Var& images, const std::vector<std::vector<int>>& targets) const;
  /// Per-position distributions under teacher forcing for a single image.
  std::vector<TokenDistribution> distributions(const Var& image, const std::vector<int>& target) const;

  BeamHypothesis greedy(const image::GrayImage& img, int max_len = -1) const;
  BeamHypothesis beam_search(const image::GrayImage& img, int beam_size, int max_len = -1) const;

  const RecognizerConfig& config() const { return cfg_; }
  const DenseNetEncoder& encoder() const { return encoder_; }
  const AttentionDecoder& decoder() const { return decoder_; }

 private:
  RecognizerConfig cfg_;
  DenseNetEncoder encoder_;
  AttentionDecoder decoder_;
};

/// Incremental scorer over one encoded image; keeps the hidden state of every row of the
/// previous call so each step costs one decoder step per hypothesis.
class RecognizerScorer : public StepScorer {
 public:
  RecognizerScorer(const Recognizer& model, const Var& image);
  int vocab_size() const override;
  std::vector<std::vector<double>> next_log_probs(const std::vector<std::vector<int>>& prefixes,
                                                  const std::vector<int>& parents) override;

 private:
  const Recognizer& model_;
  EncodedBatch enc_;
  Var initial_hidden_;
  Var hidden_;
};

struct LoadedRecognizer {
  std::unique_ptr<Recognizer> model;
  corpus::Vocabulary vocabulary;
};

inline constexpr const char* kRecognizerKind = "recognizer";

/// The archive config holds the model configuration and the vocabulary tokens.
void save_recognizer(const Recognizer& model, const corpus::Vocabulary& vocab, const std::filesystem::path& path);
LoadedRecognizer load_recognizer(const std::filesystem::path& path);
/// Fails with CheckpointMismatch unless the file holds a recognizer with this configuration.
void load_recognizer_into(Recognizer& model, const std::filesystem::path& path);

}  // namespace fgan::recognizer
