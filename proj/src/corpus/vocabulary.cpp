#include "fgan/corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace fgan::corpus {

namespace {
const std::vector<Token> kSpecials = {"<pad>", "<sos>", "<eos>", "<unk>"};
}

Vocabulary::Vocabulary() {
  for (const auto& s : kSpecials) {
    token_to_id_[s] = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(s);
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<Token> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  Vocabulary v;
  for (auto& t : tokens) {
    if (v.token_to_id_.count(t)) continue;
    v.token_to_id_[t] = static_cast<int>(v.id_to_token_.size());
    v.id_to_token_.push_back(std::move(t));
  }
  return v;
}

int Vocabulary::id(const Token& t) const {
  auto it = token_to_id_.find(t);
  return it == token_to_id_.end() ? kUnknown : it->second;
}

const Token& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw ShapeMismatch("token id " + std::to_string(id) + " out of range");
  return id_to_token_[id];
}

std::vector<int> Vocabulary::encode(const TokenSequence& seq) const {
  std::vector<int> ids;
  ids.reserve(seq.size());
  for (const auto& t : seq) ids.push_back(id(t));
  return ids;
}

TokenSequence Vocabulary::decode(const std::vector<int>& ids) const {
  TokenSequence out;
  for (int i : ids)
    if (i >= kNumSpecial) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& t : id_to_token_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  std::vector<Token> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.size() < kSpecials.size() || !std::equal(kSpecials.begin(), kSpecials.end(), lines.begin()))
    throw IoError("vocabulary " + path.string() + " does not start with the four special symbols");
  Vocabulary v;
  for (std::size_t k = kSpecials.size(); k < lines.size(); ++k) {
    if (lines[k].empty() || v.token_to_id_.count(lines[k]))
      throw IoError("vocabulary " + path.string() + ": bad or duplicate token on line " + std::to_string(k + 1));
    v.token_to_id_[lines[k]] = static_cast<int>(v.id_to_token_.size());
    v.id_to_token_.push_back(lines[k]);
  }
  return v;
}

Vocabulary build_vocabulary(const std::vector<FormulaRecord>& corpus) {
  if (corpus.empty()) throw EmptyCorpus("cannot build a vocabulary from an empty corpus");
  std::set<Token> all;
  for (const auto& r : corpus) all.insert(r.tokens.begin(), r.tokens.end());
  return Vocabulary::from_tokens({all.begin(), all.end()});
}

}  // namespace fgan::corpus
