#include "fgan/image/layout.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <optional>
#include <set>

#include "fgan/corpus/tokenizer.hpp"

namespace fgan::image {
namespace {

using corpus::Token;
using corpus::TokenSequence;

// Box under construction. Coordinates: x from the box's left edge, y relative to its baseline
// (negative is above the baseline).
struct Box {
  int width = 0, ascent = 0, descent = 0;
  std::vector<PlacedGlyph> glyphs;
  std::vector<PlacedRule> rules;
  std::vector<PlacedPath> paths;

  void place(const Box& other, int dx, int dy) {
    for (auto g : other.glyphs) {
      g.x += dx;
      g.y += dy;
      glyphs.push_back(g);
    }
    for (auto r : other.rules) {
      r.x += dx;
      r.y += dy;
      rules.push_back(r);
    }
    for (auto p : other.paths) {
      for (auto& [x, y] : p.points) {
        x += dx;
        y += dy;
      }
      paths.push_back(std::move(p));
    }
  }

  void append(const Box& other) {
    place(other, width, 0);
    width += other.width;
    ascent = std::max(ascent, other.ascent);
    descent = std::max(descent, other.descent);
  }
};

int script_size(int s) { return std::max(6, static_cast<int>(std::lround(s * 0.6))); }
int thickness(int s) { return std::max(1, static_cast<int>(std::lround(s / 16.0))); }
int gap(int s) { return std::max(1, static_cast<int>(std::lround(s / 8.0))); }

const std::set<std::string, std::less<>> kFunctionNames = {
    "\\sin", "\\cos", "\\tan", "\\cot", "\\sec", "\\csc", "\\log", "\\ln",  "\\exp", "\\lim",
    "\\max", "\\min", "\\det", "\\sinh", "\\cosh", "\\tanh", "\\arcsin", "\\arccos", "\\arctan", "\\gcd"};

const std::set<std::string, std::less<>> kUnsupported = {
    "\\hspace", "\\vspace", "\\kern", "\\mkern", "\\raisebox", "\\rule", "\\phantom", "\\hphantom",
    "\\vphantom", "\\smash", "\\mathstrut", "\\llap", "\\rlap", "\\begin", "\\end", "\\\\"};

const std::set<std::string, std::less<>> kDelimiterSizing = {
    "\\left", "\\right", "\\big", "\\Big", "\\bigg", "\\Bigg", "\\bigl", "\\bigr", "\\Bigl", "\\Bigr"};

class Layouter {
 public:
  Layouter(TokenSequence tokens, GlyphStyle base_style, bool letters_italic)
      : tokens_(std::move(tokens)), style_(base_style), letters_italic_(letters_italic) {}

  Box run(int size) {
    Box b = row(size, "");
    if (pos_ < tokens_.size()) throw RenderFailure("unexpected '" + tokens_[pos_] + "'");
    return b;
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }
  const Token& peek() const { return tokens_[pos_]; }

  Box row(int s, std::string_view closer) {
    Box out;
    while (!at_end() && peek() != closer) {
      if (peek() == "}") throw RenderFailure("unexpected '}'");
      Box base;
      if (peek() != "^" && peek() != "_") base = atom(s);
      out.append(scripts(std::move(base), s));
    }
    return out;
  }

  Box scripts(Box base, int s) {
    std::optional<Box> sup, sub;
    while (!at_end() && (peek() == "^" || peek() == "_")) {
      const bool is_sup = peek() == "^";
      ++pos_;
      auto& slot = is_sup ? sup : sub;
      if (slot) throw RenderFailure(std::string("double ") + (is_sup ? "superscript" : "subscript"));
      slot = argument(script_size(s));
    }
    if (!sup && !sub) return base;
    Box out;
    out.place(base, 0, 0);
    out.ascent = base.ascent;
    out.descent = base.descent;
    int extra = 0;
    if (sup) {
      const int shift = std::max(static_cast<int>(std::lround(0.45 * s)), base.ascent - sup->ascent / 2);
      out.place(*sup, base.width, -shift);
      out.ascent = std::max(out.ascent, shift + sup->ascent);
      out.descent = std::max(out.descent, sup->descent - shift);
      extra = sup->width;
    }
    if (sub) {
      const int shift = std::max(static_cast<int>(std::lround(0.25 * s)), base.descent);
      out.place(*sub, base.width, shift);
      out.descent = std::max(out.descent, shift + sub->descent);
      out.ascent = std::max(out.ascent, sub->ascent - shift);
      extra = std::max(extra, sub->width);
    }
    out.width = base.width + extra;
    return out;
  }

  Box argument(int s) {
    if (at_end()) throw RenderFailure("missing argument");
    if (peek() == "}" || peek() == "^" || peek() == "_") throw RenderFailure("missing argument before '" + peek() + "'");
    return atom(s);
  }

  Box glyph_box(const Token& t, int s, GlyphStyle style) {
    Box b;
    b.width = s;
    b.ascent = s;
    b.glyphs.push_back(PlacedGlyph{glyph_for(t), 0, -s, s, style});
    return b;
  }

  Box space(int w) {
    Box b;
    b.width = w;
    return b;
  }

  Box fraction(int s) {
    const Box num = argument(s);
    const Box den = argument(s);
    const int t = thickness(s), g = gap(s), axis = static_cast<int>(std::lround(s / 2.0));
    Box out;
    out.width = std::max(num.width, den.width) + 2 * g;
    const int bar_y = -axis;
    const int num_base = bar_y - g - num.descent;
    const int den_base = bar_y + t + g + den.ascent;
    out.place(num, (out.width - num.width) / 2, num_base);
    out.place(den, (out.width - den.width) / 2, den_base);
    out.rules.push_back(PlacedRule{0, bar_y, out.width, t});
    out.ascent = num.ascent - num_base;
    out.descent = std::max(0, den_base + den.descent);
    return out;
  }

  Box radical(int s) {
    std::optional<Box> index;
    if (!at_end() && peek() == "[") {
      ++pos_;
      index = row(script_size(s), "]");
      if (at_end()) throw RenderFailure("unclosed root index");
      ++pos_;
    }
    const Box body = argument(s);
    const int t = thickness(s), g = gap(s);
    const int rad_w = std::max(3, static_cast<int>(std::lround(s * 0.5)));
    const int lead = index ? std::max(0, index->width - rad_w / 2) : 0;
    Box out;
    const int top = -(body.ascent + g + t);
    const double lw = t;
    PlacedPath sign;
    sign.line_width = lw;
    sign.points = {{lead + 0.0, -body.ascent * 0.4},
                   {lead + rad_w * 0.3, -body.ascent * 0.5},
                   {lead + rad_w * 0.55, body.descent - lw / 2},
                   {lead + rad_w - lw / 2, top + lw / 2}};
    out.paths.push_back(sign);
    out.place(body, lead + rad_w, 0);
    out.width = lead + rad_w + body.width + g;
    out.rules.push_back(PlacedRule{lead + rad_w - t, top, out.width - (lead + rad_w - t), t});
    out.ascent = -top;
    out.descent = body.descent;
    if (index) {
      const int shift = static_cast<int>(std::lround(body.ascent * 0.45));
      out.place(*index, 0, -shift - index->descent);
      out.ascent = std::max(out.ascent, shift + index->descent + index->ascent);
    }
    return out;
  }

  Box accent(const Token& cmd, int s) {
    Box body = argument(s);
    const int t = thickness(s), g = gap(s);
    Box out;
    out.place(body, 0, 0);
    out.width = std::max(body.width, 1);
    out.ascent = body.ascent;
    out.descent = body.descent;
    if (cmd == "\\underline") {
      out.rules.push_back(PlacedRule{0, body.descent + g, out.width, t});
      out.descent = body.descent + g + t;
      return out;
    }
    const int y = -(body.ascent + g + t);
    if (cmd == "\\hat" || cmd == "\\widehat") {
      PlacedPath p;
      p.line_width = t;
      p.points = {{out.width * 0.2, y + t * 2.0}, {out.width * 0.5, double(y)}, {out.width * 0.8, y + t * 2.0}};
      out.paths.push_back(p);
      out.ascent = -y + t;
    } else if (cmd == "\\dot") {
      out.rules.push_back(PlacedRule{out.width / 2 - t, y - t, 2 * t, 2 * t});
      out.ascent = -(y - t);
    } else {
      out.rules.push_back(PlacedRule{0, y, out.width, t});
      out.ascent = -y;
    }
    return out;
  }

  Box styled(GlyphStyle style, bool letters_italic, int s) {
    const GlyphStyle saved = style_;
    const bool saved_italic = letters_italic_;
    style_ = style;
    letters_italic_ = letters_italic;
    Box b = argument(s);
    style_ = saved;
    letters_italic_ = saved_italic;
    return b;
  }

  Box atom(int s) {
    const Token t = tokens_[pos_++];
    if (t == "{") {
      Box b = row(s, "}");
      if (at_end()) throw RenderFailure("unclosed group");
      ++pos_;
      return b;
    }
    if (t == "\\frac" || t == "\\dfrac" || t == "\\tfrac" || t == "\\binom") return fraction(s);
    if (t == "\\sqrt") return radical(s);
    if (kUnsupported.count(t)) throw RenderFailure("unsupported command " + t);
    if (kDelimiterSizing.count(t)) {
      if (at_end()) throw RenderFailure(t + " without delimiter");
      if (peek() == ".") {
        ++pos_;
        return Box{};
      }
      return atom(s);
    }
    if (t == "\\mathbf" || t == "\\boldsymbol") return styled({true, false}, false, s);
    if (t == "\\mathit") return styled({false, true}, true, s);
    if (t == "\\mathrm" || t == "\\mathsf" || t == "\\mathtt" || t == "\\text" || t == "\\operatorname" ||
        t == "\\mathcal" || t == "\\mathbb")
      return styled({false, false}, false, s);
    if (t == "\\hat" || t == "\\bar" || t == "\\vec" || t == "\\tilde" || t == "\\dot" || t == "\\overline" ||
        t == "\\underline" || t == "\\widehat" || t == "\\widetilde")
      return accent(t, s);
    if (t == "\\quad") return space(s);
    if (t == "\\qquad") return space(2 * s);
    if (t == "\\," || t == "\\:" || t == "\\;") return space(std::max(1, s / 5));
    if (t == "~") return space(std::max(1, s / 3));
    if (t == "\\!") return space(0);
    if (t == "\\displaystyle" || t == "\\textstyle" || t == "\\limits" || t == "\\nolimits") return Box{};
    if (kFunctionNames.count(t)) {
      Box b;
      for (std::size_t i = 1; i < t.size(); ++i) b.append(glyph_box(std::string(1, t[i]), s, {style_.bold, false}));
      return b;
    }
    GlyphStyle gs = style_;
    if (letters_italic_ && t.size() == 1 && std::isalpha(static_cast<unsigned char>(t[0]))) gs.italic = true;
    return glyph_box(t, s, gs);
  }

  TokenSequence tokens_;
  std::size_t pos_ = 0;
  GlyphStyle style_;
  bool letters_italic_;
};

}  // namespace

FormulaLayout layout_formula(const std::string& latex, int font_size, const std::string& font) {
  if (font_size < 1) throw RenderFailure("font size must be positive");
  TokenSequence tokens;
  try {
    tokens = corpus::tokenize(latex);
  } catch (const corpus::TokenizeError& e) {
    throw RenderFailure(e.what());
  }
  GlyphStyle style;
  bool letters_italic = false;
  if (font == "mathbf") style.bold = true;
  else if (font == "mathit") style.italic = true;
  else if (font == "mathnormal") letters_italic = true;
  else if (font != "mathrm" && font != "mathsf" && font != "mathtt" && font != "textstyle")
    throw RenderFailure("unknown font " + font);

  Layouter layouter(std::move(tokens), style, letters_italic);
  const Box box = layouter.run(font_size);

  FormulaLayout out;
  out.width = box.width;
  out.height = box.ascent + box.descent;
  out.baseline = box.ascent;
  Box shifted;
  shifted.place(box, 0, box.ascent);
  out.glyphs = std::move(shifted.glyphs);
  out.rules = std::move(shifted.rules);
  out.paths = std::move(shifted.paths);
  if (!out.has_ink() || out.width < 1 || out.height < 1) throw RenderFailure("formula has no visible content");
  return out;
}

}  // namespace fgan::image
