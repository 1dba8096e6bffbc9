#pragma once

#include <algorithm>
#include <filesystem>

#include "fgan/corpus/record.hpp"
#include "fgan/corpus/vocabulary.hpp"
#include "fgan/image/render.hpp"
#include "fgan/trainer/config.hpp"

namespace fgan::testing {

struct TrainerFixture {
  std::vector<corpus::FormulaRecord> all;
  std::vector<corpus::FormulaRecord> short_records;  // the 16 shortest bundled formulas
  corpus::Vocabulary vocab;
  image::StubRenderer renderer;

  TrainerFixture() {
    all = corpus::load_corpus_file(corpus::bundled_corpus_path()).records;
    vocab = corpus::build_vocabulary(all);
    short_records = all;
    std::stable_sort(short_records.begin(), short_records.end(),
                     [](const auto& a, const auto& b) { return a.tokens.size() < b.tokens.size(); });
    short_records.resize(16);
  }

  static trainer::GANTrainConfig tiny_gan(std::uint64_t seed = 7) {
    trainer::GANTrainConfig c;
    c.model_preset = "tiny";
    c.task_preset = "compact";
    c.input_height = 32;
    c.max_width = 128;
    c.batch_size = 2;
    c.seed = seed;
    return c;
  }
};

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fgan_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace fgan::testing
