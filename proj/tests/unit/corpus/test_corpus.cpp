#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fgan/core/random.hpp"
#include "fgan/corpus/record.hpp"
#include "fgan/corpus/tokenizer.hpp"
#include "fgan/corpus/vocabulary.hpp"

using namespace fgan;
using namespace fgan::corpus;

TEST_CASE("tokenize follows the command grammar") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("x^{2}") == TokenSequence{"x", "^", "{", "2", "}"});
  CHECK(tokenize("\\frac{a}{b}") == TokenSequence{"\\frac", "{", "a", "}", "{", "b", "}"});
  CHECK(tokenize("\\alpha2") == TokenSequence{"\\alpha", "2"});
  CHECK(tokenize("a \\, b") == TokenSequence{"a", "\\,", "b"});
  CHECK(tokenize("\\{ x \\}") == TokenSequence{"\\{", "x", "\\}"});
  CHECK(tokenize("\\sin x") == TokenSequence{"\\sin", "x"});
  CHECK(tokenize("a\\ b") == TokenSequence{"a", "b"});
}

TEST_CASE("tokenize reports malformed input with positions") {
  CHECK_THROWS_AS(tokenize("x^{2"), UnbalancedBraces);
  CHECK_THROWS_AS(tokenize("x}"), UnbalancedBraces);
  CHECK_THROWS_AS(tokenize("a\\"), MalformedCommand);
  try {
    tokenize("ab}");
  } catch (const UnbalancedBraces& e) {
    CHECK(e.position() == 2);
  }
}

TEST_CASE("tokens carry no whitespace and commands are well formed") {
  for (const auto& t : tokenize("\\frac { \\alpha } { \\beta_{1} } + \\, \\sqrt{x}")) {
    CHECK(t.find_first_of(" \t\n") == std::string::npos);
    if (t[0] == '\\' && t.size() > 2)
      for (std::size_t i = 1; i < t.size(); ++i) CHECK(std::isalpha(static_cast<unsigned char>(t[i])));
  }
}

TEST_CASE("normalize drops spacing commands only") {
  CHECK(normalize({"a", "\\quad", "b"}) == TokenSequence{"a", "b"});
  CHECK(normalize({"a", "b"}) == TokenSequence{"a", "b"});
  CHECK(normalize({"\\,", "\\frac", "{", "x", "}", "{", "y", "}"}) ==
        TokenSequence{"\\frac", "{", "x", "}", "{", "y", "}"});
  CHECK(normalize({"\\;", "\\:", "\\!", "\\qquad", "~", "x"}) == TokenSequence{"x"});
}

namespace {
// Random formulas drawn from a small grammar of tokens, including spacing commands.
std::string random_formula(Rng& rng) {
  static const std::vector<std::string> atoms = {"x", "2", "\\alpha", "\\,", "+", "\\quad", "\\sin", "a", "\\{", "(", "~"};
  std::string s;
  const int n = rng.uniform_int(0, 12);
  for (int i = 0; i < n; ++i) {
    const int kind = rng.uniform_int(0, 5);
    if (kind == 0) s += "{" + atoms[rng.uniform_int(0, atoms.size() - 1)] + "}";
    else if (kind == 1) s += "\\frac{" + atoms[rng.uniform_int(0, atoms.size() - 1)] + "}{y}";
    else s += atoms[rng.uniform_int(0, atoms.size() - 1)];
    if (rng.bernoulli(0.4)) s += ' ';
  }
  return s;
}
}  // namespace

TEST_CASE("property: normalize is idempotent and detokenize is a tokenize fixed point") {
  Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const auto seq = tokenize(random_formula(rng));
    const auto once = normalize(seq);
    CHECK(normalize(once) == once);
    for (const auto& t : once) CHECK_FALSE(is_spacing_command(t));
    CHECK(tokenize(detokenize(seq)) == seq);
    CHECK(tokenize(join_tokens(seq)) == seq);
  }
}

TEST_CASE("vocabulary assigns specials first then tokens lexicographically") {
  Vocabulary one = build_vocabulary({make_record("r", "a")});
  CHECK(one.size() == 5);
  Vocabulary two = build_vocabulary({make_record("r", "b a")});
  CHECK(two.id("a") == 4);
  CHECK(two.id("b") == 5);
  CHECK(two.token(Vocabulary::kPad) == "<pad>");
  CHECK(two.token(Vocabulary::kStart) == "<sos>");
  CHECK(two.token(Vocabulary::kEnd) == "<eos>");
  CHECK(two.token(Vocabulary::kUnknown) == "<unk>");
  CHECK(two.id("zzz") == Vocabulary::kUnknown);
  CHECK_THROWS_AS(build_vocabulary({}), EmptyCorpus);
}

TEST_CASE("bundled corpus vocabulary size equals distinct normalized tokens plus four") {
  auto loaded = load_corpus_file(bundled_corpus_path());
  REQUIRE(loaded.records.size() == 200);
  CHECK(loaded.excluded_parse == 0);
  // Independent scan: re-read the raw file and count distinct normalized tokens.
  std::ifstream in(bundled_corpus_path());
  std::set<std::string> distinct;
  for (std::string line; std::getline(in, line);)
    if (!line.empty())
      for (const auto& t : normalize(tokenize(line))) distinct.insert(t);
  const Vocabulary v = build_vocabulary(loaded.records);
  CHECK(v.size() == static_cast<int>(distinct.size()) + 4);
  for (int i = 0; i < v.size(); ++i) CHECK(v.id(v.token(i)) == i);
}

TEST_CASE("vocabulary file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "fgan_vocab_test.txt";
  Vocabulary v = Vocabulary::from_tokens({"x", "\\frac", "{", "}"});
  v.save(path);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "<pad>");
  CHECK(Vocabulary::load(path) == v);
  std::filesystem::remove(path);
}

TEST_CASE("filter_corpus applies the inclusive length bound and the whitelist") {
  auto with_len = [](std::size_t n) {
    FormulaRecord r;
    r.id = "len" + std::to_string(n);
    r.tokens.assign(n, "x");
    return r;
  };
  auto kept = filter_corpus({with_len(51), with_len(50), with_len(3)}, 50);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "len50");
  CHECK(kept[1].id == "len3");

  std::set<Token> whitelist = {"x", "0", "+"};
  auto wl = filter_corpus({make_record("a", "x+0"), make_record("b", "D+0")}, 50, whitelist);
  REQUIRE(wl.size() == 1);
  CHECK(wl[0].id == "a");
}

TEST_CASE("property: filter_corpus output is an order-preserving subsequence") {
  Rng rng(3);
  std::vector<FormulaRecord> recs;
  for (int i = 0; i < 60; ++i) {
    FormulaRecord r;
    r.id = std::to_string(i);
    r.tokens.assign(rng.uniform_int(0, 80), "y");
    recs.push_back(r);
  }
  for (std::size_t k : {0u, 10u, 50u, 100u}) {
    auto out = filter_corpus(recs, k);
    std::size_t j = 0;
    for (const auto& r : out) {
      while (j < recs.size() && recs[j].id != r.id) ++j;
      CHECK(j < recs.size());
      ++j;
    }
  }
}

TEST_CASE("corpus loading counts parse failures and configured exclusions") {
  ExclusionRule rule{{"\\hspace"}};
  auto loaded = load_corpus_lines({"x+1", "", "\\frac{a}{", "\\hspace{1}x", "y"}, rule);
  CHECK(loaded.records.size() == 2);
  CHECK(loaded.excluded_parse == 1);
  CHECK(loaded.excluded_command == 1);
  CHECK(loaded.records[0].id == "f1");
  CHECK(loaded.records[1].id == "f5");
}
