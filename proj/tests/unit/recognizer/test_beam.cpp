#include <cmath>
#include <functional>

#include "doctest.h"
#include "fgan/image/render.hpp"
#include "fgan/recognizer/recognizer.hpp"

using namespace fgan;
using namespace fgan::recognizer;

namespace {

// Autoregressive toy: log p(. | prefix) is a log-softmax of logits drawn from a table keyed
// by (last token, prefix length), so different prefixes genuinely disagree.
class TableScorer : public StepScorer {
 public:
  TableScorer(int vocab, int horizon, std::uint64_t seed, double spread = 2.0) : V_(vocab) {
    Rng rng(seed);
    table_ = rng.normal_tensor({horizon + 2, vocab, vocab}, spread);
  }
  int vocab_size() const override { return V_; }
  std::vector<std::vector<double>> next_log_probs(const std::vector<std::vector<int>>& prefixes,
                                                  const std::vector<int>&) override {
    ++calls;
    std::vector<std::vector<double>> rows;
    for (const auto& p : prefixes) rows.push_back(log_probs(p));
    return rows;
  }
  std::vector<double> log_probs(const std::vector<int>& prefix) const {
    const int len = static_cast<int>(prefix.size());
    std::vector<double> row(V_);
    double mx = -1e300;
    for (int v = 0; v < V_; ++v) mx = std::max(mx, row[v] = logit(len, prefix.back(), v));
    double z = 0;
    for (double x : row) z += std::exp(x - mx);
    for (double& x : row) x -= mx + std::log(z);
    return row;
  }
  virtual double logit(int len, int last, int v) const {
    return table_[(static_cast<std::size_t>(len) * V_ + last) * V_ + v];
  }
  int calls = 0;

 protected:
  int V_;
  Tensor table_;
};

// Brute force over every emitted sequence of length 1..max_len whose only END is the last token.
BeamHypothesis exhaustive_best(const TableScorer& s, const BeamOptions& opt) {
  BeamHypothesis best;
  bool have = false;
  std::function<void(std::vector<int>&, double)> walk = [&](std::vector<int>& prefix, double score) {
    if (static_cast<int>(prefix.size()) - 1 >= opt.max_len) return;
    const auto lp = s.log_probs(prefix);
    for (int v = 0; v < s.vocab_size(); ++v) {
      prefix.push_back(v);
      if (v == opt.end_id) {
        BeamHypothesis h{prefix, score + lp[v], true};
        if (!have || better_hypothesis(h, best)) best = h, have = true;
      } else {
        walk(prefix, score + lp[v]);
      }
      prefix.pop_back();
    }
  };
  std::vector<int> start{opt.start_id};
  walk(start, 0.0);
  return best;
}

double rescore(const TableScorer& s, const BeamHypothesis& h) {
  double total = 0;
  for (std::size_t t = 1; t < h.tokens.size(); ++t) {
    const std::vector<int> prefix(h.tokens.begin(), h.tokens.begin() + t);
    total += s.log_probs(prefix)[h.tokens[t]];
  }
  return total;
}

}  // namespace

TEST_CASE("beam search matches exhaustive enumeration on a three-token toy") {
  const BeamOptions opt{27, 3, 0, 2};
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    TableScorer s(3, 3, seed, 1.5);
    const BeamHypothesis oracle = exhaustive_best(s, opt);
    const BeamHypothesis got = beam_search(s, opt);
    CHECK(got.finished);
    CHECK(got.tokens == oracle.tokens);
    CHECK(got.log_prob == doctest::Approx(oracle.log_prob).epsilon(1e-12));
  }
}

TEST_CASE("beam size one reproduces greedy decoding") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    TableScorer s(6, 8, seed);
    const BeamOptions opt{1, 8, 1, 2};
    const auto g = greedy_decode(s, opt);
    const auto b = beam_search(s, opt);
    CHECK(g.tokens == b.tokens);
    CHECK(g.log_prob == b.log_prob);
  }
}

TEST_CASE("property: wider beams never score below greedy and scores are sums of step log-probs") {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    TableScorer s(5, 7, 100 + seed, 1.0);
    const int beam = 2 + static_cast<int>(seed % 4);
    const BeamOptions opt{beam, 7, 1, 2};
    const auto g = greedy_decode(s, opt);
    const auto b = beam_search(s, opt);
    CHECK_FALSE(better_hypothesis(g, b));
    if (g.finished && b.finished) CHECK(b.log_prob >= g.log_prob);
    CHECK(b.log_prob == doctest::Approx(rescore(s, b)).epsilon(1e-12));
    CHECK(b.finished == (b.tokens.back() == opt.end_id));
  }
}

TEST_CASE("beam search is deterministic") {
  TableScorer s(8, 10, 7);
  const BeamOptions opt{4, 10, 1, 2};
  const auto a = beam_search(s, opt);
  const auto b = beam_search(s, opt);
  CHECK(a.tokens == b.tokens);
  CHECK(a.log_prob == b.log_prob);
}

namespace {

// Tokens 3 and 4 are equally likely first; END follows with certainty.
class TieScorer : public TableScorer {
 public:
  TieScorer() : TableScorer(5, 4, 1) {}
  double logit(int len, int, int v) const override {
    if (len == 1) return (v == 3 || v == 4) ? 0.0 : -50.0;
    return v == 2 ? 0.0 : -50.0;
  }
};

// END is effectively unreachable.
class NeverEnds : public TableScorer {
 public:
  NeverEnds() : TableScorer(4, 6, 2) {}
  double logit(int len, int last, int v) const override { return v == 2 ? -1e4 : TableScorer::logit(len, last, v); }
};

}  // namespace

TEST_CASE("equal scores are broken by token order") {
  TieScorer s;
  const auto h = beam_search(s, {3, 5, 1, 2});
  CHECK(h.tokens == std::vector<int>{1, 3, 2});
  CHECK(h.body() == std::vector<int>{3});
}

TEST_CASE("without a finished hypothesis the best unfinished one is flagged") {
  NeverEnds s;
  const auto h = beam_search(s, {3, 5, 1, 2});
  CHECK_FALSE(h.finished);
  CHECK(h.tokens.size() == 6);
  CHECK(h.body().size() == 5);
  CHECK_THROWS_AS(beam_search(s, {0, 5, 1, 2}), ConfigError);
}

TEST_CASE("recognizer beam search agrees with greedy at width one and with teacher-forced scores") {
  Rng rng(9);
  RecognizerConfig cfg;
  cfg.encoder = {2, 2, 4, false};
  cfg.decoder = {9, 6, 8, 6};
  Recognizer model(cfg, rng);
  model.set_training(false);
  image::StubRenderer stub;
  const image::GrayImage img = image::render("x+1", {}, stub);
  const auto g = model.greedy(img, 8);
  const auto b1 = model.beam_search(img, 1, 8);
  CHECK(g.tokens == b1.tokens);
  CHECK(g.log_prob == doctest::Approx(b1.log_prob).epsilon(1e-12));

  const auto b = model.beam_search(img, 4, 8);
  CHECK_FALSE(better_hypothesis(g, b));
  CHECK(model.beam_search(img, 4, 8).tokens == b.tokens);

  // The incremental scorer must agree with a from-scratch teacher-forced pass over the result.
  const auto body = b.body();
  const auto dists = model.distributions(constant(image::to_tensor(img)), body);
  double total = 0;
  for (std::size_t t = 0; t + 1 < b.tokens.size(); ++t) total += std::log(dists[t][b.tokens[t + 1]]);
  CHECK(total == doctest::Approx(b.log_prob).epsilon(1e-9));
}
