#include "fgan/corpus/tokenizer.hpp"

#include <algorithm>
#include <array>

namespace fgan::corpus {

namespace {

bool is_ascii_letter(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

constexpr std::array<std::string_view, 7> kSpacing = {"\\,", "\\;", "\\:", "\\!", "\\quad", "\\qquad", "~"};

}  // namespace

TokenSequence tokenize(std::string_view latex) {
  TokenSequence out;
  std::vector<std::size_t> open_braces;
  std::size_t i = 0;
  while (i < latex.size()) {
    const auto c = static_cast<unsigned char>(latex[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '\\') {
      if (i + 1 >= latex.size()) throw MalformedCommand("backslash at end of input", i);
      const auto next = static_cast<unsigned char>(latex[i + 1]);
      if (is_ascii_letter(next)) {
        std::size_t j = i + 1;
        while (j < latex.size() && is_ascii_letter(static_cast<unsigned char>(latex[j]))) ++j;
        out.emplace_back(latex.substr(i, j - i));
        i = j;
      } else if (is_space(next)) {
        // Control space: pure spacing with no glyph, and a token may not hold whitespace.
        i += 2;
      } else {
        const std::size_t len = utf8_length(next);
        if (i + 1 + len > latex.size()) throw MalformedCommand("truncated UTF-8 sequence", i);
        out.emplace_back(latex.substr(i, 1 + len));
        i += 1 + len;
      }
      continue;
    }
    const std::size_t len = utf8_length(c);
    if (i + len > latex.size()) throw MalformedCommand("truncated UTF-8 sequence", i);
    if (c == '{') open_braces.push_back(i);
    if (c == '}') {
      if (open_braces.empty()) throw UnbalancedBraces("closing brace without opening brace", i);
      open_braces.pop_back();
    }
    out.emplace_back(latex.substr(i, len));
    i += len;
  }
  if (!open_braces.empty()) throw UnbalancedBraces("unclosed brace", open_braces.back());
  return out;
}

bool is_spacing_command(std::string_view token) {
  return std::find(kSpacing.begin(), kSpacing.end(), token) != kSpacing.end();
}

bool is_letter_command(std::string_view token) {
  return token.size() >= 2 && token[0] == '\\' && is_ascii_letter(static_cast<unsigned char>(token[1]));
}

TokenSequence normalize(const TokenSequence& seq) {
  TokenSequence out;
  out.reserve(seq.size());
  for (const auto& t : seq)
    if (!is_spacing_command(t)) out.push_back(t);
  return out;
}

std::string detokenize(const TokenSequence& seq) {
  std::string out;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (k > 0 && is_letter_command(seq[k - 1]) && !seq[k].empty() &&
        is_ascii_letter(static_cast<unsigned char>(seq[k][0])))
      out += ' ';
    out += seq[k];
  }
  return out;
}

std::string join_tokens(const TokenSequence& seq) {
  std::string out;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (k) out += ' ';
    out += seq[k];
  }
  return out;
}

}  // namespace fgan::corpus
