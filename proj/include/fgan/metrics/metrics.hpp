#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fgan/corpus/tokenizer.hpp"
#include "fgan/recognizer/recognizer.hpp"
#include "fgan/trainer/data.hpp"

namespace fgan::metrics {

FGAN_DEFINE_ERROR(EmptyReference);
FGAN_DEFINE_ERROR(EmptyList);

/// Levenshtein distance with unit insert, delete and substitute costs.
template <class Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Token-level edit distance divided by the reference length.
double wer(const corpus::TokenSequence& ref, const corpus::TokenSequence& hyp);

using SequencePair = std::pair<corpus::TokenSequence, corpus::TokenSequence>;  // (reference, hypothesis)

/// Percentage of pairs whose normalized token sequences are identical.
double exprate(const std::vector<SequencePair>& pairs);

struct EvalReport {
  double perplexity = 0;  // NaN when not measured
  double wer = 0;         // total edits / total reference tokens
  double exprate = 0;
  std::size_t n_samples = 0;
};

/// Teacher-forced perplexity. Corpus level: exp(sum of token losses / sum of token counts),
/// END included, over batches of `batch_size`. With per_formula, the exponentiated mean loss of
/// each formula is averaged instead.
double perplexity(const recognizer::Recognizer& model, const trainer::Dataset& data, int batch_size = 8,
                  bool per_formula = false);

/// Corpus-level perplexity of per-position distributions against their truth ids (PAD skipped).
double perplexity(const std::vector<std::vector<recognizer::TokenDistribution>>& preds,
                  const std::vector<std::vector<int>>& truths);

/// WER and ExpRate over (reference, hypothesis) pairs.
EvalReport score_pairs(const std::vector<SequencePair>& pairs);

struct Prediction {
  std::string id;
  corpus::TokenSequence tokens;
  double log_prob = 0;
};

void write_predictions(const std::vector<Prediction>& preds, const std::filesystem::path& path);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

/// Pairs each manifest row with the prediction of the same id; rows without a prediction count
/// as empty hypotheses. The truth may name the dataset directory or its manifest file.
std::vector<SequencePair> match_predictions(const std::vector<Prediction>& preds,
                                            const std::filesystem::path& truth_manifest_dir);

/// Beam-search every sample and return the predictions in dataset order.
std::vector<Prediction> predict(const recognizer::Recognizer& model, const corpus::Vocabulary& vocab,
                                const trainer::Dataset& data, int beam_size, int max_len = -1);

/// One header line "name,perplexity,wer,exprate,n_samples" and one row per report.
void write_report_csv(const std::vector<std::pair<std::string, EvalReport>>& rows, const std::filesystem::path& path);
std::string format_report(const std::string& name, const EvalReport& r);

}  // namespace fgan::metrics
