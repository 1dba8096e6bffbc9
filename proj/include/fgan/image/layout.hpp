#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fgan/core/error.hpp"
#include "fgan/image/glyphs.hpp"

namespace fgan::image {

FGAN_DEFINE_ERROR(RenderFailure);

struct GlyphStyle {
  bool bold = false;
  bool italic = false;
};

// Primitives positioned in pixel coordinates: x grows right, y grows down, origin at the
// top-left of the formula's ink box (padding excluded).
struct PlacedGlyph {
  Glyph glyph;
  int x = 0, y = 0, size = 0;
  GlyphStyle style;
};

struct PlacedRule {
  int x = 0, y = 0, width = 0, height = 0;
};

struct PlacedPath {
  std::vector<std::pair<double, double>> points;
  double line_width = 1.0;
};

struct FormulaLayout {
  int width = 0, height = 0;
  int baseline = 0;
  std::vector<PlacedGlyph> glyphs;
  std::vector<PlacedRule> rules;
  std::vector<PlacedPath> paths;

  bool has_ink() const { return !glyphs.empty() || !rules.empty() || !paths.empty(); }
};

/// Box layout of a LaTeX string: glyph cells of `font_size` pixels laid out left to right,
/// raised/lowered scripts at 0.6x size, stacked fractions and radicals.
///
/// `font` is one of the RenderParams font names; it selects upright, italic or bold glyphs.
/// Throws RenderFailure for text the layout cannot handle (tokenizer errors, dangling
/// arguments, explicit positioning commands such as \hspace).
FormulaLayout layout_formula(const std::string& latex, int font_size, const std::string& font = "mathrm");

}  // namespace fgan::image
