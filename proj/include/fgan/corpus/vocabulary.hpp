#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "fgan/corpus/record.hpp"
#include "fgan/corpus/tokenizer.hpp"

namespace fgan::corpus {

FGAN_DEFINE_ERROR(EmptyCorpus);

/// Bijection between tokens and integer ids. Ids 0-3 are reserved for the special symbols.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnknown = 3;
  static constexpr int kNumSpecial = 4;

  Vocabulary();
  /// Specials followed by the given tokens in lexicographic order (duplicates collapsed).
  static Vocabulary from_tokens(std::vector<Token> tokens);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  bool contains(const Token& t) const { return token_to_id_.count(t) != 0; }
  /// Unknown tokens map to kUnknown.
  int id(const Token& t) const;
  const Token& token(int id) const;

  std::vector<int> encode(const TokenSequence& seq) const;
  /// Special ids are skipped.
  TokenSequence decode(const std::vector<int>& ids) const;

  /// One token per line; line number minus one is the id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<Token> id_to_token_;
  std::unordered_map<Token, int> token_to_id_;
};

Vocabulary build_vocabulary(const std::vector<FormulaRecord>& corpus);

}  // namespace fgan::corpus
