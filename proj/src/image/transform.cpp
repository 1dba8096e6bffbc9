#include "fgan/image/transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace fgan::image {

void validate(const AugmentRanges& r) {
  if (r.max_rotation_deg < 0 || r.max_rotation_deg > 4.0) throw ConfigError("rotation range must lie within 4 degrees");
  if (r.max_shear < 0) throw ConfigError("shear range must be non-negative");
  if (r.min_pad < 10 || r.max_pad > 20 || r.min_pad > r.max_pad) throw ConfigError("padding range must lie within [10, 20]");
  if (r.min_aspect <= 0 || r.min_aspect > r.max_aspect) throw ConfigError("aspect range invalid");
}

AugmentParams sample_augment_params(Rng& rng, const AugmentRanges& r) {
  AugmentParams p;
  p.rotation_deg = rng.uniform(-r.max_rotation_deg, r.max_rotation_deg);
  p.shear = rng.uniform(-r.max_shear, r.max_shear);
  p.border_pad = rng.uniform_int(r.min_pad, r.max_pad);
  p.aspect_scale = rng.uniform(r.min_aspect, r.max_aspect);
  return p;
}

std::pair<double, double> AugmentGeometry::forward(double x, double y) const {
  const double dx = x - in_cx, dy = y - in_cy;
  return {out_cx + m[0][0] * dx + m[0][1] * dy, out_cy + m[1][0] * dx + m[1][1] * dy};
}

AugmentGeometry augment_geometry(int height, int width, const AugmentParams& p) {
  AugmentGeometry g;
  const double th = p.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  // Rotation (counter-clockwise on a y-down raster) * shear * horizontal stretch.
  const double a = p.aspect_scale, k = p.shear;
  g.m[0][0] = c * a;
  g.m[0][1] = c * k + s;
  g.m[1][0] = -s * a;
  g.m[1][1] = -s * k + c;
  g.in_cx = width / 2.0;
  g.in_cy = height / 2.0;
  double ex = 0, ey = 0;
  for (const auto& [dx, dy] : std::array<std::pair<double, double>, 4>{
           {{-g.in_cx, -g.in_cy}, {g.in_cx, -g.in_cy}, {-g.in_cx, g.in_cy}, {g.in_cx, g.in_cy}}}) {
    ex = std::max(ex, std::abs(g.m[0][0] * dx + g.m[0][1] * dy));
    ey = std::max(ey, std::abs(g.m[1][0] * dx + g.m[1][1] * dy));
  }
  const int cw = std::max(1, static_cast<int>(std::ceil(2 * ex - 1e-9)));
  const int ch = std::max(1, static_cast<int>(std::ceil(2 * ey - 1e-9)));
  g.out_width = cw + 2 * p.border_pad;
  g.out_height = ch + 2 * p.border_pad;
  g.out_cx = g.out_width / 2.0;
  g.out_cy = g.out_height / 2.0;
  return g;
}

namespace {

// Bilinear sample at continuous pixel-centre coordinates; zero outside the image.
float sample_zero(const GrayImage& img, double x, double y) {
  const double u = x - 0.5, v = y - 0.5;
  const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
  const double fx = u - x0, fy = v - y0;
  const double v00 = img.at_or_zero(y0, x0), v01 = img.at_or_zero(y0, x0 + 1);
  const double v10 = img.at_or_zero(y0 + 1, x0), v11 = img.at_or_zero(y0 + 1, x0 + 1);
  return static_cast<float>((1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11));
}

}  // namespace

GrayImage augment(const GrayImage& img, const AugmentParams& p) {
  const AugmentGeometry g = augment_geometry(img.height(), img.width(), p);
  const double det = g.m[0][0] * g.m[1][1] - g.m[0][1] * g.m[1][0];
  const double i00 = g.m[1][1] / det, i01 = -g.m[0][1] / det, i10 = -g.m[1][0] / det, i11 = g.m[0][0] / det;
  GrayImage out(g.out_height, g.out_width);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const double dx = x + 0.5 - g.out_cx, dy = y + 0.5 - g.out_cy;
      const double sx = g.in_cx + i00 * dx + i01 * dy, sy = g.in_cy + i10 * dx + i11 * dy;
      out(y, x) = std::clamp(sample_zero(img, sx, sy), 0.0f, 1.0f);
    }
  }
  return out;
}

GrayImage augment(const GrayImage& img, const AugmentRanges& ranges, Rng& rng) {
  return augment(img, sample_augment_params(rng, ranges));
}

GrayImage normalize_intensity(const GrayImage& img) {
  const auto px = img.pixels();
  const float lo = img.min_value(), hi = img.max_value();
  if (lo == hi) return img;

  constexpr int kBins = 256;
  auto bin_of = [](float v) { return std::clamp(static_cast<int>(v * kBins), 0, kBins - 1); };
  std::array<std::size_t, kBins> counts{};
  for (float v : px) ++counts[bin_of(v)];
  const int mode = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  // The background counts as bright when the ink lies below it, which pulls the image mean
  // under the background level. Flip polarity so ink is the high side.
  double mode_sum = 0, total = 0;
  for (float v : px) {
    total += v;
    if (bin_of(v) == mode) mode_sum += v;
  }
  const bool invert = total / px.size() < mode_sum / counts[mode];

  std::vector<float> vals(px.begin(), px.end());
  if (invert)
    for (float& v : vals) v = 1.0f - v;
  // Background level: the most extreme non-ink value inside the mode bin.
  float bg = INFINITY;
  for (std::size_t i = 0; i < vals.size(); ++i)
    if (bin_of(px[i]) == mode) bg = std::min(bg, vals[i]);

  std::vector<float> ink_side;
  for (float v : vals)
    if (v > bg) ink_side.push_back(v);
  if (ink_side.empty()) return img;
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * ink_side.size())) - 1;
  std::nth_element(ink_side.begin(), ink_side.begin() + rank, ink_side.end());
  const float ink = ink_side[rank];

  GrayImage out(img.height(), img.width());
  const double span = static_cast<double>(ink) - bg;
  for (std::size_t i = 0; i < vals.size(); ++i)
    out.pixels()[i] = static_cast<float>(std::clamp((vals[i] - static_cast<double>(bg)) / span, 0.0, 1.0));
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int height, int width) {
  if (height == img.height() && width == img.width()) return img;
  GrayImage out(height, width);
  const double sy = static_cast<double>(img.height()) / height, sx = static_cast<double>(img.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double v = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(v), y1 = std::min(y0 + 1, img.height() - 1);
    const double fy = v - y0;
    for (int x = 0; x < width; ++x) {
      const double u = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(u), x1 = std::min(x0 + 1, img.width() - 1);
      const double fx = u - x0;
      out(y, x) = static_cast<float>((1 - fy) * ((1 - fx) * img(y0, x0) + fx * img(y0, x1)) +
                                     fy * ((1 - fx) * img(y1, x0) + fx * img(y1, x1)));
    }
  }
  return out;
}

std::optional<GrayImage> resize_for_training(const GrayImage& img, int target_height, int max_width) {
  const double scale = static_cast<double>(target_height) / img.height();
  const int width = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
  if (width > max_width) return std::nullopt;
  return resize_bilinear(img, target_height, width);
}

}  // namespace fgan::image
