#include "fgan/corpus/record.hpp"

#include <fstream>

namespace fgan {

const char* domain_name(DomainLabel d) { return d == DomainLabel::Rendered ? "rendered" : "handwritten"; }

DomainLabel parse_domain(const std::string& name) {
  if (name == "rendered") return DomainLabel::Rendered;
  if (name == "handwritten") return DomainLabel::Handwritten;
  throw ConfigError("unknown domain '" + name + "'");
}

}  // namespace fgan

namespace fgan::corpus {

FormulaRecord make_record(std::string id, std::string latex, DomainLabel domain) {
  FormulaRecord r;
  r.id = std::move(id);
  r.tokens = normalize(tokenize(latex));
  r.source_latex = std::move(latex);
  r.domain = domain;
  return r;
}

std::vector<FormulaRecord> filter_corpus(const std::vector<FormulaRecord>& records, std::size_t max_tokens,
                                         const std::optional<std::set<Token>>& whitelist) {
  std::vector<FormulaRecord> out;
  for (const auto& r : records) {
    if (r.tokens.size() > max_tokens) continue;
    if (whitelist) {
      bool ok = true;
      for (const auto& t : r.tokens)
        if (!whitelist->count(t)) {
          ok = false;
          break;
        }
      if (!ok) continue;
    }
    out.push_back(r);
  }
  return out;
}

bool ExclusionRule::excludes(const TokenSequence& tokens) const {
  for (const auto& t : tokens)
    if (excluded_commands.count(t)) return true;
  return false;
}

LoadedCorpus load_corpus_lines(const std::vector<std::string>& lines, const ExclusionRule& rule,
                               const std::string& id_prefix, DomainLabel domain) {
  LoadedCorpus out;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    std::string line = lines[k];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      FormulaRecord r = make_record(id_prefix + std::to_string(k + 1), line, domain);
      if (rule.excludes(tokenize(line))) {
        ++out.excluded_command;
        continue;
      }
      out.records.push_back(std::move(r));
    } catch (const TokenizeError&) {
      ++out.excluded_parse;
    }
  }
  return out;
}

LoadedCorpus load_corpus_file(const std::string& path, const ExclusionRule& rule, const std::string& id_prefix,
                              DomainLabel domain) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return load_corpus_lines(lines, rule, id_prefix, domain);
}

std::string bundled_corpus_path() { return std::string(FGAN_DATA_DIR) + "/sample_corpus.txt"; }

}  // namespace fgan::corpus
