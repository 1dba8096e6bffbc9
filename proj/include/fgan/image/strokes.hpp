#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fgan/core/error.hpp"
#include "fgan/core/random.hpp"
#include "fgan/image/gray_image.hpp"

namespace fgan::image {

FGAN_DEFINE_ERROR(DegenerateStrokes);

struct Point {
  double x = 0, y = 0;
  bool operator==(const Point&) const = default;
};

using Polyline = std::vector<Point>;

struct StrokeSet {
  std::vector<Polyline> strokes;

  bool empty() const { return strokes.empty(); }
  std::size_t point_count() const;
};

struct InkmlDocument {
  StrokeSet strokes;
  /// LaTeX ground truth from an `annotation type="truth"` element, dollar signs stripped.
  std::optional<std::string> truth;
};

/// Reads the `trace` elements of an InkML document. Each trace is a comma-separated list of
/// points whose first two numbers are x and y; further channels (time, pressure) are ignored.
InkmlDocument parse_inkml(const std::string& text);
InkmlDocument load_inkml(const std::filesystem::path& path);

/// Line width used when none is given: target_height / 64, at least one pixel.
double default_line_width(int target_height);

/// Scales strokes isotropically so the bounding box spans target_height rows and draws them
/// with intensity 1 on a zero background. A set with zero height (a horizontal stroke) is scaled
/// by its width instead and drawn on the middle row.
///
/// Throws DegenerateStrokes when there are fewer than two distinct points.
GrayImage rasterize_strokes(const StrokeSet& strokes, int target_height, double line_width = -1.0);

/// Draws an anti-aliased segment of the given width; pixel (r, c) has its centre at (c+0.5, r+0.5).
void draw_segment(GrayImage& img, Point a, Point b, double line_width);

/// Synthetic handwriting: the formula's layout converted to pen strokes through the glyph dots,
/// with per-glyph affine wobble and per-point jitter. Coordinates are in layout pixels at
/// `font_size`. Throws RenderFailure for formulas the layout rejects.
StrokeSet synthesize_strokes(const std::string& latex, Rng& rng, int font_size = 32);

}  // namespace fgan::image
