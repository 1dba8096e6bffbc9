#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fgan/core/error.hpp"

namespace fgan::corpus {

/// One lexical unit of a formula: a letter command (`\frac`), a symbol command (`\,`),
/// or a single non-whitespace character (a UTF-8 sequence counts as one character).
using Token = std::string;
using TokenSequence = std::vector<Token>;

class TokenizeError : public Error {
 public:
  TokenizeError(std::string kind, const std::string& what, std::size_t position)
      : Error(std::move(kind), what + " at byte " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnbalancedBraces : public TokenizeError {
 public:
  UnbalancedBraces(const std::string& what, std::size_t pos) : TokenizeError("UnbalancedBraces", what, pos) {}
};

class MalformedCommand : public TokenizeError {
 public:
  MalformedCommand(const std::string& what, std::size_t pos) : TokenizeError("MalformedCommand", what, pos) {}
};

TokenSequence tokenize(std::string_view latex);

/// Drops spacing commands (`\,` `\;` `\:` `\!` `\quad` `\qquad` `~`); all other tokens keep their order.
TokenSequence normalize(const TokenSequence& seq);

bool is_spacing_command(std::string_view token);
bool is_letter_command(std::string_view token);

/// Inverse of tokenize up to whitespace: a space is inserted only where a letter command is
/// followed by a token starting with a letter, so the result re-tokenizes to the same sequence.
std::string detokenize(const TokenSequence& seq);

/// Tokens joined by single spaces; the representation used in manifests and reports.
std::string join_tokens(const TokenSequence& seq);

}  // namespace fgan::corpus
