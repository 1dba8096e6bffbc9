#include "fgan/metrics/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <sstream>

#include "fgan/image/manifest.hpp"

namespace fgan::metrics {

double wer(const corpus::TokenSequence& ref, const corpus::TokenSequence& hyp) {
  if (ref.empty()) throw EmptyReference("WER needs a non-empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) / static_cast<double>(ref.size());
}

double exprate(const std::vector<SequencePair>& pairs) {
  if (pairs.empty()) throw EmptyList("ExpRate over no pairs");
  std::size_t exact = 0;
  for (const auto& [ref, hyp] : pairs)
    if (corpus::normalize(ref) == corpus::normalize(hyp)) ++exact;
  return 100.0 * static_cast<double>(exact) / static_cast<double>(pairs.size());
}

EvalReport score_pairs(const std::vector<SequencePair>& pairs) {
  EvalReport r;
  r.perplexity = std::numeric_limits<double>::quiet_NaN();
  r.exprate = exprate(pairs);
  std::size_t edits = 0, ref_tokens = 0;
  for (const auto& [ref, hyp] : pairs) {
    if (ref.empty()) throw EmptyReference("WER needs non-empty references");
    edits += edit_distance(ref, hyp);
    ref_tokens += ref.size();
  }
  r.wer = static_cast<double>(edits) / static_cast<double>(ref_tokens);
  r.n_samples = pairs.size();
  return r;
}

double perplexity(const recognizer::Recognizer& model, const trainer::Dataset& data, int batch_size, bool per_formula) {
  if (data.samples.empty()) throw trainer::EmptyDataset("perplexity over an empty dataset");
  NoGradGuard guard;
  const int step = per_formula ? 1 : std::max(1, batch_size);
  double loss = 0, formula_ppl = 0;
  long tokens = 0;
  for (std::size_t i = 0; i < data.samples.size(); i += step) {
    const std::size_t end = std::min(data.samples.size(), i + step);
    std::vector<image::GrayImage> imgs;
    std::vector<std::vector<int>> targets;
    for (std::size_t k = i; k < end; ++k) {
      imgs.push_back(data.samples[k].image);
      targets.push_back(data.samples[k].token_ids);
    }
    const auto tf = model.teacher_force(constant(trainer::stack_padded(imgs, 16)), targets);
    if (per_formula) formula_ppl += std::exp(tf.loss_sum.item() / tf.tokens);
    loss += tf.loss_sum.item();
    tokens += tf.tokens;
  }
  if (per_formula) return formula_ppl / static_cast<double>(data.samples.size());
  return std::exp(loss / static_cast<double>(tokens));
}

double perplexity(const std::vector<std::vector<recognizer::TokenDistribution>>& preds,
                  const std::vector<std::vector<int>>& truths) {
  if (preds.empty()) throw trainer::EmptyDataset("perplexity over no sequences");
  if (preds.size() != truths.size()) throw recognizer::LengthMismatch("perplexity: predictions and truths differ in count");
  double loss = 0;
  long tokens = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    loss += recognizer::task_loss(preds[i], truths[i]);
    tokens += std::count_if(truths[i].begin(), truths[i].end(), [](int t) { return t != corpus::Vocabulary::kPad; });
  }
  if (tokens == 0) throw trainer::EmptyDataset("perplexity over sequences without tokens");
  return std::exp(loss / static_cast<double>(tokens));
}

void write_predictions(const std::vector<Prediction>& preds, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : preds) out << nlohmann::json{{"id", p.id}, {"tokens", p.tokens}, {"log_prob", p.log_prob}}.dump() << "\n";
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<Prediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("tokens").get<corpus::TokenSequence>(), j.value("log_prob", 0.0)});
    } catch (const nlohmann::json::exception& e) {
      throw image::CorruptManifest(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SequencePair> match_predictions(const std::vector<Prediction>& preds,
                                            const std::filesystem::path& truth_manifest_dir) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : preds) by_id[p.id] = &p;
  std::vector<SequencePair> pairs;
  const auto dir = std::filesystem::is_regular_file(truth_manifest_dir) ? truth_manifest_dir.parent_path() : truth_manifest_dir;
  for (const auto& e : image::read_manifest(dir, false)) {
    const auto it = by_id.find(e.record.id);
    pairs.emplace_back(e.record.tokens, it == by_id.end() ? corpus::TokenSequence{} : it->second->tokens);
  }
  return pairs;
}

std::vector<Prediction> predict(const recognizer::Recognizer& model, const corpus::Vocabulary& vocab,
                                const trainer::Dataset& data, int beam_size, int max_len) {
  std::vector<Prediction> out;
  for (const auto& s : data.samples) {
    const auto hyp = model.beam_search(s.image, beam_size, max_len);
    out.push_back({s.id, vocab.decode(hyp.body()), hyp.log_prob});
  }
  return out;
}

std::string format_report(const std::string& name, const EvalReport& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << name << ": perplexity=" << r.perplexity << " wer=" << r.wer
    << " exprate=" << std::setprecision(2) << r.exprate << "% n=" << r.n_samples;
  return s.str();
}

void write_report_csv(const std::vector<std::pair<std::string, EvalReport>>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "name,perplexity,wer,exprate,n_samples\n" << std::setprecision(10);
  for (const auto& [name, r] : rows) {
    out << name << ',';
    if (!std::isnan(r.perplexity)) out << r.perplexity;
    out << ',' << r.wer << ',' << r.exprate << ',' << r.n_samples << '\n';
  }
}

}  // namespace fgan::metrics
