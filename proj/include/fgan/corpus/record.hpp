#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fgan/corpus/tokenizer.hpp"

namespace fgan {

/// The two image domains; also the condition of the generator and the class of the discriminator.
enum class DomainLabel : int { Rendered = 0, Handwritten = 1 };

inline constexpr int kNumDomains = 2;

const char* domain_name(DomainLabel d);
DomainLabel parse_domain(const std::string& name);
inline DomainLabel other_domain(DomainLabel d) {
  return d == DomainLabel::Rendered ? DomainLabel::Handwritten : DomainLabel::Rendered;
}

}  // namespace fgan

namespace fgan::corpus {

struct FormulaRecord {
  std::string id;
  std::string source_latex;
  TokenSequence tokens;
  DomainLabel domain = DomainLabel::Rendered;
  std::optional<std::string> image_path;

  bool operator==(const FormulaRecord&) const = default;
};

/// Tokenized and normalized record.
FormulaRecord make_record(std::string id, std::string latex, DomainLabel domain = DomainLabel::Rendered);

/// Keeps records with at most max_tokens tokens whose tokens all belong to the whitelist (when given).
std::vector<FormulaRecord> filter_corpus(const std::vector<FormulaRecord>& records, std::size_t max_tokens,
                                         const std::optional<std::set<Token>>& whitelist = std::nullopt);

/// Commands that make a formula unusable for rendering; the set is configuration, not built in.
struct ExclusionRule {
  std::set<Token> excluded_commands;
  bool excludes(const TokenSequence& tokens) const;
};

struct LoadedCorpus {
  std::vector<FormulaRecord> records;
  std::size_t excluded_parse = 0;    // failed to tokenize
  std::size_t excluded_command = 0;  // hit the exclusion rule
};

/// Reads one formula per line (blank lines skipped). Record ids are "<prefix><line number>".
LoadedCorpus load_corpus_file(const std::string& path, const ExclusionRule& rule = {}, const std::string& id_prefix = "f",
                              DomainLabel domain = DomainLabel::Rendered);
LoadedCorpus load_corpus_lines(const std::vector<std::string>& lines, const ExclusionRule& rule = {},
                               const std::string& id_prefix = "f", DomainLabel domain = DomainLabel::Rendered);

/// Path of the bundled sample corpus.
std::string bundled_corpus_path();

}  // namespace fgan::corpus
