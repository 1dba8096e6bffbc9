#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "doctest.h"
#include "fgan/image/manifest.hpp"
#include "fgan/metrics/metrics.hpp"

using namespace fgan;
using namespace fgan::metrics;
using corpus::TokenSequence;

namespace {

// Memoized recursion over suffixes; shares no code with the row-based implementation.
std::size_t levenshtein_oracle(const TokenSequence& a, const TokenSequence& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = d(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, d(i + 1, j) + 1);
    best = std::min(best, d(i, j + 1) + 1);
    return memo[key] = best;
  };
  return d(0, 0);
}

TokenSequence random_sequence(Rng& rng, int max_len) {
  static const TokenSequence alphabet = {"x", "y", "+", "\\frac", "{", "}"};
  TokenSequence s(rng.uniform_int(0, max_len));
  for (auto& t : s) t = alphabet[rng.uniform_int(0, 3)];
  return s;
}

}  // namespace

TEST_CASE("wer examples") {
  CHECK(wer({"a", "b", "c"}, {"a", "b", "c"}) == 0.0);
  CHECK(wer({"a", "b", "c"}, {"a", "c"}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(wer({"a", "b"}, {}) == 1.0);
  CHECK(wer({"a"}, {"b", "c", "d"}) == 3.0);
  CHECK_THROWS_AS(wer({}, {"a"}), EmptyReference);
}

TEST_CASE("property: edit distance equals the recursive oracle on 1000 random pairs") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const TokenSequence a = random_sequence(rng, 9), b = random_sequence(rng, 9);
    REQUIRE(edit_distance(a, b) == levenshtein_oracle(a, b));
    if (!a.empty()) CHECK(wer(a, b) == static_cast<double>(levenshtein_oracle(a, b)) / a.size());
  }
}

TEST_CASE("property: edit distance is a metric") {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    const TokenSequence a = random_sequence(rng, 7), b = random_sequence(rng, 7), c = random_sequence(rng, 7);
    CHECK(edit_distance(a, a) == 0);
    CHECK(edit_distance(a, b) == edit_distance(b, a));
    CHECK(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
    CHECK(edit_distance(a, b) <= std::max(a.size(), b.size()));
  }
}

TEST_CASE("exprate examples and spacing normalization") {
  const TokenSequence x = {"x"}, y = {"y"};
  CHECK(exprate({{x, x}, {y, y}}) == 100.0);
  CHECK(exprate({{x, x}, {y, y}, {x, y}, {y, x}, {x, {}}}) == 40.0);
  CHECK(exprate({{{"a", "+", "b"}, {"a", "\\,", "+", "\\quad", "b"}}}) == 100.0);
  CHECK_THROWS_AS(exprate({}), EmptyList);
}

TEST_CASE("property: exprate of a partition and its complement sum to 100") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SequencePair> pairs;
    const int n = rng.uniform_int(1, 30);
    std::size_t exact = 0;
    for (int i = 0; i < n; ++i) {
      const TokenSequence ref = random_sequence(rng, 4);
      const bool same = rng.bernoulli(0.5);
      TokenSequence hyp = ref;
      if (!same) hyp.push_back("z");
      exact += same;
      pairs.emplace_back(ref, hyp);
    }
    std::vector<SequencePair> flipped;
    for (const auto& [ref, hyp] : pairs) {
      TokenSequence changed = ref;
      changed.push_back("z");
      flipped.emplace_back(ref, ref == hyp ? changed : ref);
    }
    CHECK(exprate(pairs) == doctest::Approx(100.0 * exact / n).epsilon(1e-12));
    CHECK(exprate(pairs) + exprate(flipped) == doctest::Approx(100.0).epsilon(1e-12));
  }
}

TEST_CASE("perplexity of a uniform distribution equals the vocabulary size") {
  Rng rng(4);
  for (int V : {3, 10, 100}) {
    std::vector<std::vector<recognizer::TokenDistribution>> preds;
    std::vector<std::vector<int>> truths;
    for (int s = 0; s < 5; ++s) {
      const int T = rng.uniform_int(1, 12);
      preds.emplace_back(T, recognizer::TokenDistribution(V, 1.0 / V));
      truths.emplace_back(T);
      for (int& t : truths.back()) t = rng.uniform_int(1, V - 1);
    }
    CHECK(std::abs(perplexity(preds, truths) - V) < 1e-6);
  }
  CHECK(perplexity({{{0.0, 1.0}, {0.0, 0.0, 1.0}}}, {{1, 2}}) == 1.0);
  CHECK_THROWS_AS(perplexity(std::vector<std::vector<recognizer::TokenDistribution>>{}, {}), trainer::EmptyDataset);
}

namespace {

recognizer::RecognizerConfig toy_config(int V) {
  recognizer::RecognizerConfig cfg;
  cfg.encoder = {2, 1, 2, false};
  cfg.decoder = {V, 3, 4, 3};
  cfg.max_len = 12;
  return cfg;
}

trainer::Dataset toy_dataset(Rng& rng, int V, int n, int width = 32) {
  trainer::Dataset ds{"toy", {}};
  for (int i = 0; i < n; ++i) {
    std::vector<float> px(16 * width);
    for (auto& p : px) p = static_cast<float>(rng.uniform(0, 1));
    std::vector<int> ids(rng.uniform_int(1, 6));
    for (int& t : ids) t = rng.uniform_int(corpus::Vocabulary::kNumSpecial, V - 1);
    ds.samples.push_back({"s" + std::to_string(i), "", image::GrayImage(16, width, px), ids, DomainLabel::Rendered});
  }
  return ds;
}

}  // namespace

TEST_CASE("model with constant logits has perplexity equal to the vocabulary size") {
  for (int V : {10, 100}) {
    Rng rng(5);
    recognizer::Recognizer model(toy_config(V), rng);
    for (auto& [name, p] : model.named_parameters())
      if (name.rfind("decoder.out.", 0) == 0) p.mutable_value().fill(0.0);
    model.set_training(false);
    const trainer::Dataset ds = toy_dataset(rng, V, 7);
    CHECK(std::abs(perplexity(model, ds, 3) - V) < 1e-6);
    CHECK(std::abs(perplexity(model, ds, 3, true) - V) < 1e-6);
  }
}

TEST_CASE("model perplexity agrees with task_loss over teacher-forced distributions") {
  Rng rng(6);
  const int V = 9;
  recognizer::Recognizer model(toy_config(V), rng);
  model.set_training(false);
  const trainer::Dataset ds = toy_dataset(rng, V, 6);
  double loss = 0;
  long tokens = 0;
  std::vector<std::vector<recognizer::TokenDistribution>> preds;
  std::vector<std::vector<int>> truths;
  for (const auto& s : ds.samples) {
    std::vector<int> truth = s.token_ids;
    truth.push_back(corpus::Vocabulary::kEnd);
    preds.push_back(model.distributions(constant(image::to_tensor(s.image)), s.token_ids));
    truths.push_back(truth);
    loss += recognizer::task_loss(preds.back(), truth);
    tokens += static_cast<long>(truth.size());
  }
  const double expected = std::exp(loss / tokens);
  CHECK(std::abs(perplexity(model, ds, 4) - expected) < 1e-6);
  CHECK(std::abs(perplexity(model, ds, 1) - expected) < 1e-6);
  CHECK(std::abs(perplexity(preds, truths) - expected) < 1e-9);
  CHECK(perplexity(model, ds) >= 1.0);
  CHECK_THROWS_AS(perplexity(model, trainer::Dataset{}), trainer::EmptyDataset);
}

TEST_CASE("predictions round trip and match against a manifest") {
  const auto dir = std::filesystem::temp_directory_path() / "fgan_metrics_eval";
  std::filesystem::remove_all(dir);
  std::vector<image::ManifestEntry> truth;
  const std::vector<TokenSequence> refs = {{"x", "+", "y"}, {"a"}, {"\\frac", "{", "1", "}", "{", "2", "}"}, {"b", "c"}};
  for (std::size_t i = 0; i < refs.size(); ++i) {
    image::ManifestEntry e;
    e.record.id = "f" + std::to_string(i);
    e.record.source_latex = "-";
    e.record.tokens = refs[i];
    e.record.image_path = "images/" + e.record.id + ".png";
    e.token_ids = std::vector<int>(refs[i].size(), 4);
    e.height = e.width = 1;
    truth.push_back(e);
  }
  image::write_manifest(truth, dir);
  const std::vector<Prediction> preds = {{"f0", {"x", "+", "y"}, -0.5}, {"f1", {"b"}, -1.0}, {"f2", refs[2], -2.0}};
  write_predictions(preds, dir / "pred.jsonl");
  const auto back = read_predictions(dir / "pred.jsonl");
  REQUIRE(back.size() == 3);
  CHECK(back[2].tokens == refs[2]);
  CHECK(back[1].log_prob == -1.0);

  const auto pairs = match_predictions(back, dir / image::kManifestName);
  REQUIRE(pairs.size() == 4);
  CHECK(pairs[3].second.empty());
  const EvalReport r = score_pairs(pairs);
  CHECK(r.n_samples == 4);
  CHECK(r.exprate == 50.0);
  CHECK(r.wer == doctest::Approx(3.0 / 13.0).epsilon(1e-15));  // one substitution plus two deletions
  CHECK(std::isnan(r.perplexity));

  write_report_csv({{"toy", r}}, dir / "report.csv");
  std::ifstream in(dir / "report.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "name,perplexity,wer,exprate,n_samples");
  CHECK(row.rfind("toy,,0.2307692308,50,4", 0) == 0);
  std::filesystem::remove_all(dir);
}
