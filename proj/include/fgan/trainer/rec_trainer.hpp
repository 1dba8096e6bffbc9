#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "fgan/core/optim.hpp"
#include "fgan/recognizer/recognizer.hpp"
#include "fgan/trainer/data.hpp"

namespace fgan::trainer {

/// Divides the learning rate by `factor` after `patience` consecutive evaluations without a
/// strict improvement of the tracked metric (higher is better), then starts counting afresh.
class PlateauScheduler {
 public:
  PlateauScheduler(Optimizer& opt, int patience, double factor);
  /// Records one evaluation; returns true when the learning rate was reduced.
  bool step(double metric);
  bool improved_last() const { return improved_; }
  double best() const { return best_; }
  int reductions() const { return reductions_; }

 private:
  Optimizer& opt_;
  int patience_;
  double factor_;
  double best_ = -std::numeric_limits<double>::infinity();
  int stale_ = 0;
  int reductions_ = 0;
  bool improved_ = false;
};

/// Percentage of samples whose greedy decoding equals the reference ids exactly.
double greedy_exprate(const recognizer::Recognizer& model, const std::vector<Sample>& samples, int max_len = -1);

struct EpochRecord {
  int epoch = 0;
  long step = 0;
  double exprate = 0;
  double lr = 0;
  bool lr_reduced = false;
};

struct RecTrainResult {
  long steps = 0;
  std::vector<double> losses;  // per step, mean summed cross-entropy per sequence
  std::vector<EpochRecord> epochs;
  double best_exprate = 0;
  int lr_reductions = 0;
  std::filesystem::path best_checkpoint;
};

/// Trains a recognizer on a mixture of datasets, drawing each batch element from a source
/// chosen with equal probability (empty sources are skipped). After every epoch the validation
/// ExpRate is logged, the plateau scheduler updated and the best model saved to best.ckpt.
/// Stops after max_steps or once the validation ExpRate reaches target_exprate. Writes
/// config.resolved, metrics.csv and validation.csv to out_dir.
RecTrainResult train_recognizer(const std::vector<Dataset>& mix, const Dataset& validation, const RecTrainConfig& cfg,
                                const corpus::Vocabulary& vocab, const std::filesystem::path& out_dir);

/// Variant that trains a caller-owned model (used when the model must outlive the run).
RecTrainResult train_recognizer(recognizer::Recognizer& model, const std::vector<Dataset>& mix,
                                const Dataset& validation, const RecTrainConfig& cfg, const corpus::Vocabulary& vocab,
                                const std::filesystem::path& out_dir);

}  // namespace fgan::trainer
