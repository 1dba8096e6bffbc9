#include "fgan/trainer/data.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "fgan/image/manifest.hpp"
#include "fgan/image/transform.hpp"

namespace fgan::trainer {

using image::GrayImage;

bool within_token_limit(std::size_t tokens, int max_tokens) { return tokens <= static_cast<std::size_t>(max_tokens); }
bool within_width_limit(int width, int max_width) { return width <= max_width; }
bool within_area_limit(int height, int width, std::size_t max_area) {
  return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) < max_area;
}

int normalized_height(NormalizeMode mode, const std::string& latex, int symbol_height) {
  if (mode == NormalizeMode::Height128) return 128;
  try {
    return std::max(8, image::layout_formula(latex, symbol_height).height);
  } catch (const image::RenderFailure&) {
    return symbol_height;
  }
}

std::optional<GrayImage> normalize_for_recognition(const GrayImage& img, const std::string& latex, NormalizeMode mode,
                                                   int symbol_height, int max_width) {
  const int h = normalized_height(mode, latex, symbol_height);
  return image::resize_for_training(img, h, max_width > 0 ? max_width : std::numeric_limits<int>::max());
}

Tensor stack_padded(std::span<const GrayImage> imgs, int multiple, std::vector<int>* widths) {
  if (imgs.empty()) throw EmptyBatch("stack_padded: no images");
  int H = 0, W = 0;
  for (const auto& im : imgs) {
    H = std::max(H, im.height());
    W = std::max(W, im.width());
  }
  multiple = std::max(1, multiple);
  H = (H + multiple - 1) / multiple * multiple;
  W = (W + multiple - 1) / multiple * multiple;
  Tensor out({static_cast<int>(imgs.size()), 1, H, W});
  if (widths) widths->clear();
  for (std::size_t n = 0; n < imgs.size(); ++n) {
    const GrayImage& im = imgs[n];
    for (int y = 0; y < im.height(); ++y)
      for (int x = 0; x < im.width(); ++x) out[(n * H + y) * W + x] = im(y, x);
    if (widths) widths->push_back(im.width());
  }
  return out;
}

MixSampler::MixSampler(std::vector<double> weights) {
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0)) throw ConfigError("mixture weights must be non-negative");
    total += w;
    cumulative_.push_back(total);
  }
  if (!(total > 0)) throw EmptyDataset("mixture has no weight");
  for (double& c : cumulative_) c /= total;
}

std::size_t MixSampler::next(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1);
}

Dataset load_dataset(const std::filesystem::path& dir, NormalizeMode mode, int symbol_height, int max_width,
                     std::size_t* dropped) {
  Dataset ds;
  ds.name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  std::size_t lost = 0;
  for (const auto& e : image::read_manifest(dir, true)) {
    if (!e.record.image_path) {
      ++lost;
      continue;
    }
    const GrayImage raw = image::normalize_intensity(image::read_png(dir / *e.record.image_path));
    auto img = normalize_for_recognition(raw, e.record.source_latex, mode, symbol_height, max_width);
    if (!img) {
      ++lost;
      continue;
    }
    ds.samples.push_back({e.record.id, e.record.source_latex, std::move(*img), e.token_ids, e.record.domain});
  }
  if (dropped) *dropped = lost;
  return ds;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr error;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

PrepareReport prepare_dataset(const std::vector<corpus::FormulaRecord>& records, const corpus::Vocabulary& vocab,
                              DomainLabel domain, const image::RendererBackend& renderer,
                              const std::filesystem::path& dir, std::uint64_t seed, int workers, bool sample_fonts) {
  std::filesystem::create_directories(dir / "images");
  std::vector<std::optional<image::ManifestEntry>> rows(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const auto& rec = records[i];
    Rng rng(derive_seed(seed, rec.id));
    GrayImage img;
    try {
      if (domain == DomainLabel::Handwritten) {
        img = image::render_handwritten(rec.source_latex, rng);
      } else {
        const image::RenderParams params = sample_fonts ? image::sample_render_params(rng) : image::RenderParams{};
        img = image::render(rec.source_latex, params, renderer);
      }
    } catch (const image::RenderFailure&) {
      return;
    }
    const std::string rel = "images/" + rec.id + ".png";
    image::write_png(img, dir / rel);
    image::ManifestEntry e{rec, vocab.encode(rec.tokens), img.height(), img.width()};
    e.record.domain = domain;
    e.record.image_path = rel;
    rows[i] = std::move(e);
  });
  PrepareReport report;
  std::vector<image::ManifestEntry> entries;
  for (auto& r : rows) {
    if (r) {
      entries.push_back(std::move(*r));
      ++report.written;
    } else {
      ++report.failed;
    }
  }
  image::write_manifest(entries, dir);
  return report;
}

MetricsLog::MetricsLog(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path_.string());
  out << "step,l_d,l_g,l_t,lr\n";
}

void MetricsLog::append(long step, double l_d, double l_g, double l_t, double lr) {
  std::ofstream out(path_, std::ios::app);
  out.precision(10);
  auto field = [&](double v) {
    out << ',';
    if (!std::isnan(v)) out << v;
  };
  out << step;
  field(l_d);
  field(l_g);
  field(l_t);
  field(lr);
  out << '\n';
}

}  // namespace fgan::trainer
