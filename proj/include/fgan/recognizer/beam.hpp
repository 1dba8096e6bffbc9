#pragma once

#include <vector>

namespace fgan::recognizer {

struct BeamHypothesis {
  std::vector<int> tokens;  // starts with the start id
  double log_prob = 0.0;    // sum of per-step log-probabilities
  bool finished = false;    // last token is the end id

  /// Emitted tokens without the start id and without a trailing end id.
  std::vector<int> body() const;
};

/// Source of next-token log-probabilities for a batch of prefixes.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual int vocab_size() const = 0;
  /// Row i holds log p(. | prefixes[i]). parents[i] is the row of the previous call that
  /// prefixes[i] extends by one token, or -1 when a new search starts.
  virtual std::vector<std::vector<double>> next_log_probs(const std::vector<std::vector<int>>& prefixes,
                                                          const std::vector<int>& parents) = 0;
};

struct BeamOptions {
  int beam_size = 10;
  int max_len = 200;  // emitted tokens, the end id included
  int start_id = 1;
  int end_id = 2;
};

/// Orders hypotheses: finished before unfinished, then higher score, then the
/// lexicographically smaller token sequence.
bool better_hypothesis(const BeamHypothesis& a, const BeamHypothesis& b);

/// Argmax at every step (lowest id on ties).
BeamHypothesis greedy_decode(StepScorer& scorer, const BeamOptions& opt);

/// Beam search over summed log-probabilities with no length normalization. Candidates are
/// ranked by score, ties by token sequence; a candidate ending in end_id leaves the beam as
/// a finished hypothesis. The search stops early once the best finished score beats every
/// live prefix. The greedy hypothesis is also scored and returned if it ranks higher, so the
/// result never scores below greedy decoding. When nothing finishes within max_len the best
/// unfinished hypothesis is returned with finished == false.
BeamHypothesis beam_search(StepScorer& scorer, const BeamOptions& opt);

}  // namespace fgan::recognizer
