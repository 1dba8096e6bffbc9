#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgan/corpus/vocabulary.hpp"
#include "fgan/image/render.hpp"
#include "fgan/trainer/config.hpp"

namespace fgan::trainer {

FGAN_DEFINE_ERROR(EmptyDataset);

struct Sample {
  std::string id;
  std::string latex;
  image::GrayImage image;
  std::vector<int> token_ids;
  DomainLabel domain = DomainLabel::Rendered;
};

struct Dataset {
  std::string name;
  std::vector<Sample> samples;
};

/// Training filters, each a strict reading of its threshold.
bool within_token_limit(std::size_t tokens, int max_tokens);            // tokens <= max_tokens
bool within_width_limit(int width, int max_width);                      // width <= max_width
bool within_area_limit(int height, int width, std::size_t max_area);    // height*width < max_area

/// Target height for an image of `latex` under the normalization mode. Height128 gives 128;
/// SymbolHeight gives the height of the formula typeset at font size symbol_height
/// (symbol_height itself when the formula cannot be laid out).
int normalized_height(NormalizeMode mode, const std::string& latex, int symbol_height);

/// Resizes to normalized_height(); nullopt when the result is wider than max_width (> 0).
std::optional<image::GrayImage> normalize_for_recognition(const image::GrayImage& img, const std::string& latex,
                                                          NormalizeMode mode, int symbol_height, int max_width);

/// Pads every image with background to the largest height and width in the set, rounded up
/// to `multiple`, and stacks them into [N,1,H,W]. Returns per-image widths through `widths`.
Tensor stack_padded(std::span<const image::GrayImage> imgs, int multiple, std::vector<int>* widths = nullptr);

/// Draws a source index with probability proportional to its weight.
class MixSampler {
 public:
  explicit MixSampler(std::vector<double> weights);
  std::size_t next(Rng& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

/// Reads a manifest directory into memory: PNGs are intensity-normalized and resized per mode.
/// Records without an image or failing the width limit are dropped and counted in `dropped`.
Dataset load_dataset(const std::filesystem::path& dir, NormalizeMode mode, int symbol_height, int max_width,
                     std::size_t* dropped = nullptr);

struct PrepareReport {
  std::size_t written = 0;
  std::size_t failed = 0;  // renderer rejected the formula
};

/// Renders each record (StubRenderer/HTTP for the rendered domain, synthetic handwriting
/// for the handwritten domain), writes <dir>/images/<id>.png and the manifest. Work is split
/// across `workers` threads; each record draws from its own seed derived from (seed, id),
/// so the output does not depend on the worker count.
PrepareReport prepare_dataset(const std::vector<corpus::FormulaRecord>& records, const corpus::Vocabulary& vocab,
                              DomainLabel domain, const image::RendererBackend& renderer,
                              const std::filesystem::path& dir, std::uint64_t seed, int workers = 1,
                              bool sample_fonts = true);

/// Applies `fn(i)` for i in [0, n) on up to `workers` threads. Exceptions are rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Appends "step,l_d,l_g,l_t,lr" rows; fields passed as NaN are written empty.
class MetricsLog {
 public:
  explicit MetricsLog(const std::filesystem::path& path);
  void append(long step, double l_d, double l_g, double l_t, double lr);

 private:
  std::filesystem::path path_;
};

}  // namespace fgan::trainer
