#include "fgan/recognizer/beam.hpp"

#include <algorithm>
#include <string>

#include "fgan/core/error.hpp"

namespace fgan::recognizer {

std::vector<int> BeamHypothesis::body() const {
  std::vector<int> out(tokens.begin() + (tokens.empty() ? 0 : 1), tokens.end());
  if (finished && !out.empty()) out.pop_back();
  return out;
}

bool better_hypothesis(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.finished != b.finished) return a.finished;
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

namespace {

void check(const StepScorer& scorer, const BeamOptions& opt) {
  if (opt.beam_size < 1) throw ConfigError("beam size must be >= 1, got " + std::to_string(opt.beam_size));
  if (opt.max_len < 1) throw ConfigError("max_len must be >= 1");
  const int V = scorer.vocab_size();
  if (opt.end_id < 0 || opt.end_id >= V || opt.start_id < 0 || opt.start_id >= V)
    throw ConfigError("start/end ids outside the vocabulary");
}

void check_rows(const std::vector<std::vector<double>>& rows, std::size_t n, int V) {
  if (rows.size() != n) throw ShapeMismatch("scorer returned the wrong number of rows");
  for (const auto& r : rows)
    if (static_cast<int>(r.size()) != V) throw ShapeMismatch("scorer returned a row of the wrong width");
}

}  // namespace

BeamHypothesis greedy_decode(StepScorer& scorer, const BeamOptions& opt) {
  check(scorer, opt);
  const int V = scorer.vocab_size();
  BeamHypothesis h{{opt.start_id}, 0.0, false};
  int parent = -1;
  for (int t = 0; t < opt.max_len && !h.finished; ++t) {
    const auto rows = scorer.next_log_probs({h.tokens}, {parent});
    check_rows(rows, 1, V);
    const auto& lp = rows.front();
    const int best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    h.tokens.push_back(best);
    h.log_prob += lp[best];
    h.finished = best == opt.end_id;
    parent = 0;
  }
  return h;
}

BeamHypothesis beam_search(StepScorer& scorer, const BeamOptions& opt) {
  check(scorer, opt);
  const BeamHypothesis greedy = greedy_decode(scorer, opt);

  const int V = scorer.vocab_size();
  std::vector<BeamHypothesis> live{{{opt.start_id}, 0.0, false}};
  std::vector<int> parents{-1};
  std::vector<BeamHypothesis> finished;

  struct Candidate {
    double score;
    int parent;
    int token;
  };

  for (int t = 0; t < opt.max_len && !live.empty(); ++t) {
    if (!finished.empty()) {
      double best_live = live.front().log_prob;
      for (const auto& h : live) best_live = std::max(best_live, h.log_prob);
      if (finished.front().log_prob > best_live) break;
    }
    std::vector<std::vector<int>> prefixes;
    for (const auto& h : live) prefixes.push_back(h.tokens);
    const auto rows = scorer.next_log_probs(prefixes, parents);
    check_rows(rows, live.size(), V);

    std::vector<Candidate> cands;
    cands.reserve(live.size() * V);
    for (std::size_t i = 0; i < live.size(); ++i)
      for (int v = 0; v < V; ++v) cands.push_back({live[i].log_prob + rows[i][v], static_cast<int>(i), v});
    // Ties on score fall back to lexicographic order of the extended sequence: first the
    // parent prefix, then the new token.
    auto before = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return live[a.parent].tokens < live[b.parent].tokens;
      return a.token < b.token;
    };
    const std::size_t keep = std::min<std::size_t>(opt.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), before);

    std::vector<BeamHypothesis> next;
    std::vector<int> next_parents;
    for (std::size_t c = 0; c < keep; ++c) {
      BeamHypothesis h = live[cands[c].parent];
      h.tokens.push_back(cands[c].token);
      h.log_prob = cands[c].score;
      if (cands[c].token == opt.end_id) {
        h.finished = true;
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
        next_parents.push_back(cands[c].parent);
      }
    }
    std::sort(finished.begin(), finished.end(), better_hypothesis);
    live = std::move(next);
    parents = std::move(next_parents);
  }

  const BeamHypothesis best =
      finished.empty() ? *std::min_element(live.begin(), live.end(), better_hypothesis) : finished.front();
  return better_hypothesis(greedy, best) ? greedy : best;
}

}  // namespace fgan::recognizer
