#include "fgan/image/strokes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "fgan/image/layout.hpp"

namespace fgan::image {

std::size_t StrokeSet::point_count() const {
  std::size_t n = 0;
  for (const auto& s : strokes) n += s.size();
  return n;
}

namespace {

Polyline parse_trace(std::string_view body) {
  Polyline line;
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t comma = body.find(',', start);
    if (comma == std::string_view::npos) comma = body.size();
    std::istringstream in{std::string(body.substr(start, comma - start))};
    double x, y;
    if (in >> x >> y) line.push_back({x, y});
    start = comma + 1;
  }
  return line;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n$");
  const auto e = s.find_last_not_of(" \t\r\n$");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

InkmlDocument parse_inkml(const std::string& text) {
  InkmlDocument doc;
  std::size_t pos = 0;
  while ((pos = text.find("<trace", pos)) != std::string::npos) {
    const std::size_t tag_end = text.find('>', pos);
    if (tag_end == std::string::npos) throw IoError("unterminated trace tag");
    // "<traceGroup" and "<traceFormat" share the prefix; only bare trace elements hold points.
    const char after = text[pos + 6];
    if (after != '>' && after != ' ' && after != '\t' && after != '\n' && after != '\r' && after != '/') {
      pos = tag_end;
      continue;
    }
    if (text[tag_end - 1] == '/') {
      pos = tag_end;
      continue;
    }
    const std::size_t close = text.find("</trace>", tag_end);
    if (close == std::string::npos) throw IoError("unterminated trace element");
    Polyline line = parse_trace(std::string_view(text).substr(tag_end + 1, close - tag_end - 1));
    if (!line.empty()) doc.strokes.strokes.push_back(std::move(line));
    pos = close;
  }
  const std::size_t ann = text.find("type=\"truth\"");
  if (ann != std::string::npos) {
    const std::size_t open_end = text.find('>', ann);
    const std::size_t close = text.find("</annotation>", open_end);
    if (open_end != std::string::npos && close != std::string::npos)
      doc.truth = trim(text.substr(open_end + 1, close - open_end - 1));
  }
  return doc;
}

InkmlDocument load_inkml(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_inkml(ss.str());
}

double default_line_width(int target_height) { return std::max(1.0, target_height / 64.0); }

void draw_segment(GrayImage& img, Point a, Point b, double line_width) {
  const double r = line_width / 2.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r - 1)));
  const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r - 1)));
  const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r + 1)));
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      double t = len2 > 0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
      const double d = std::sqrt(ex * ex + ey * ey);
      const float v = static_cast<float>(std::clamp(r + 0.5 - d, 0.0, 1.0));
      if (v > img(y, x)) img(y, x) = v;
    }
  }
}

GrayImage rasterize_strokes(const StrokeSet& strokes, int target_height, double line_width) {
  if (target_height < 1) throw DegenerateStrokes("target height must be positive");
  std::set<std::pair<double, double>> distinct;
  double min_x = INFINITY, max_x = -INFINITY, min_y = INFINITY, max_y = -INFINITY;
  for (const auto& line : strokes.strokes) {
    for (const auto& p : line) {
      if (distinct.size() < 2) distinct.insert({p.x, p.y});
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
  }
  if (distinct.size() < 2) throw DegenerateStrokes("need at least two distinct points");
  const double lw = line_width > 0 ? line_width : default_line_width(target_height);
  const double usable = std::max(1e-9, target_height - lw);
  const double bw = max_x - min_x, bh = max_y - min_y;
  const bool flat = bh <= 0;
  const double scale = flat ? usable / bw : usable / bh;
  const int width = std::max(1, static_cast<int>(std::ceil(bw * scale + lw - 1e-9)));
  const double y_origin = flat ? std::floor(target_height / 2.0) + 0.5 : lw / 2.0;

  GrayImage img(target_height, width);
  auto map = [&](const Point& p) { return Point{(p.x - min_x) * scale + lw / 2.0, (p.y - min_y) * scale + y_origin}; };
  for (const auto& line : strokes.strokes) {
    if (line.size() == 1) draw_segment(img, map(line[0]), map(line[0]), lw);
    for (std::size_t i = 1; i < line.size(); ++i) draw_segment(img, map(line[i - 1]), map(line[i]), lw);
  }
  return img;
}

StrokeSet synthesize_strokes(const std::string& latex, Rng& rng, int font_size) {
  const FormulaLayout layout = layout_formula(latex, font_size, "mathrm");
  StrokeSet out;
  const double jitter = font_size * 0.015;
  auto noisy = [&](Point p) { return Point{p.x + rng.normal(0, jitter), p.y + rng.normal(0, jitter)}; };

  for (const auto& g : layout.glyphs) {
    const double s = g.size;
    const double cx = g.x + s / 2.0, cy = g.y + s / 2.0;
    const double angle = rng.uniform(-6.0, 6.0) * std::numbers::pi / 180.0;
    const double scale = rng.uniform(0.88, 1.1);
    const double tx = rng.uniform(-0.05, 0.05) * s, ty = rng.uniform(-0.05, 0.05) * s;
    const double slant = rng.uniform(-0.15, 0.15);
    auto dot_center = [&](int row, int col) {
      double x = g.x + (col + 1.5) * s / 7.0 - cx;
      double y = g.y + (row + 1.5) * s / 9.0 - cy;
      x += slant * -y;
      const double rx = std::cos(angle) * x - std::sin(angle) * y;
      const double ry = std::sin(angle) * x + std::cos(angle) * y;
      return Point{cx + tx + scale * rx, cy + ty + scale * ry};
    };
    auto lit = [&](int r, int c) { return glyph_dot(g.glyph, r, c); };
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 5; ++c) {
        if (!lit(r, c)) continue;
        bool linked = false;
        auto link = [&](int r2, int c2) {
          const Point a = dot_center(r, c), b = dot_center(r2, c2);
          const Point mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
          out.strokes.push_back({noisy(a), noisy(mid), noisy(b)});
          linked = true;
        };
        if (lit(r, c + 1)) link(r, c + 1);
        if (lit(r + 1, c)) link(r + 1, c);
        if (lit(r + 1, c + 1) && !lit(r, c + 1) && !lit(r + 1, c)) link(r + 1, c + 1);
        if (lit(r + 1, c - 1) && !lit(r, c - 1) && !lit(r + 1, c)) link(r + 1, c - 1);
        const bool has_parent = lit(r, c - 1) || lit(r - 1, c) || lit(r - 1, c - 1) || lit(r - 1, c + 1);
        if (!linked && !has_parent) {
          const Point a = dot_center(r, c);
          out.strokes.push_back({noisy(a), noisy({a.x + s * 0.05, a.y + s * 0.05})});
        }
      }
    }
  }
  for (const auto& rule : layout.rules) {
    const double y = rule.y + rule.height / 2.0;
    Polyline line;
    for (int k = 0; k <= 4; ++k) line.push_back(noisy({rule.x + rule.width * k / 4.0, y}));
    out.strokes.push_back(std::move(line));
  }
  for (const auto& path : layout.paths) {
    Polyline line;
    for (const auto& [x, y] : path.points) line.push_back(noisy({x, y}));
    out.strokes.push_back(std::move(line));
  }
  return out;
}

}  // namespace fgan::image
