#include "fgan/image/render.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <json.hpp>

#include "fgan/image/strokes.hpp"
#include "fgan/image/transform.hpp"

namespace fgan::image {

void validate(const RenderParams& p) {
  if (std::find_if(kFonts.begin(), kFonts.end(), [&](const char* f) { return p.font == f; }) == kFonts.end())
    throw ConfigError("unknown font '" + p.font + "'");
  if (p.padding < kMinPadding || p.padding > kMaxPadding) throw ConfigError("padding out of range [0, 15]");
  if (p.font_size < kMinFontSize || p.font_size > kMaxFontSize) throw ConfigError("font_size out of range [16, 50]");
}

RenderParams sample_render_params(Rng& rng) {
  RenderParams p;
  p.font = kFonts[rng.uniform_int(0, static_cast<int>(kFonts.size()) - 1)];
  p.padding = rng.uniform_int(kMinPadding, kMaxPadding);
  p.font_size = rng.uniform_int(kMinFontSize, kMaxFontSize);
  return p;
}

std::vector<RenderResult> RendererBackend::render_batch(const std::vector<RenderRequest>& requests) const {
  std::vector<RenderResult> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    try {
      out.push_back({render(r.latex, r.params), {}});
    } catch (const RenderFailure& e) {
      out.push_back({std::nullopt, e.what()});
    }
  }
  return out;
}

namespace {

void draw_glyph(GrayImage& img, const PlacedGlyph& g, int ox, int oy) {
  const int s = g.size;
  for (int py = 0; py < s; ++py) {
    const int gy = py * 9 / s - 1;
    const int shift = g.style.italic ? static_cast<int>(std::lround(s / 7.0 * (1.0 - (py + 0.5) / s))) : 0;
    for (int px = 0; px < s; ++px) {
      const int sx = px - shift;
      if (sx < 0) continue;
      const int gx = sx * 7 / s - 1;
      const bool on = glyph_dot(g.glyph, gy, gx) || (g.style.bold && glyph_dot(g.glyph, gy, gx - 1));
      const int y = oy + g.y + py, x = ox + g.x + px;
      if (on && y >= 0 && x >= 0 && y < img.height() && x < img.width()) img(y, x) = 1.0f;
    }
  }
}

}  // namespace

GrayImage StubRenderer::render(const std::string& latex, const RenderParams& params) const {
  validate(params);
  const FormulaLayout layout = layout_formula(latex, params.font_size, params.font);
  const int p = params.padding;
  GrayImage img(layout.height + 2 * p, layout.width + 2 * p);
  for (const auto& g : layout.glyphs) draw_glyph(img, g, p, p);
  for (const auto& r : layout.rules)
    for (int y = std::max(0, p + r.y); y < std::min(img.height(), p + r.y + r.height); ++y)
      for (int x = std::max(0, p + r.x); x < std::min(img.width(), p + r.x + r.width); ++x) img(y, x) = 1.0f;
  for (const auto& path : layout.paths)
    for (std::size_t i = 1; i < path.points.size(); ++i) {
      const auto [ax, ay] = path.points[i - 1];
      const auto [bx, by] = path.points[i];
      draw_segment(img, {ax + p, ay + p}, {bx + p, by + p}, path.line_width);
    }
  // Anti-aliased paths may bleed half a pixel outside the layout box; keep the margin blank.
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (y < p || x < p || y >= img.height() - p || x >= img.width() - p) img(y, x) = 0.0f;
  return img;
}

HttpRenderer::HttpRenderer(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.empty()) throw ConfigError("render service URL is empty");
}

namespace {

nlohmann::json request_json(const std::string& latex, const RenderParams& p) {
  return {{"latex", latex}, {"font", p.font}, {"font_size", p.font_size}, {"padding", p.padding}};
}

}  // namespace

GrayImage HttpRenderer::render(const std::string& latex, const RenderParams& params) const {
  validate(params);
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_seconds_);
  cli.set_read_timeout(timeout_seconds_);
  auto res = cli.Post("/render", request_json(latex, params).dump(), "application/json");
  if (!res) throw IoError("render service at " + base_url_ + " unreachable: " + httplib::to_string(res.error()));
  if (res->status == 422) throw RenderFailure("service rejected formula: " + res->body);
  if (res->status != 200) throw IoError("render service returned HTTP " + std::to_string(res->status) + ": " + res->body);
  const auto* data = reinterpret_cast<const unsigned char*>(res->body.data());
  return decode_png({data, res->body.size()});
}

std::vector<RenderResult> HttpRenderer::render_batch(const std::vector<RenderRequest>& requests) const {
  if (requests.empty()) return {};
  nlohmann::json body = nlohmann::json::array();
  for (const auto& r : requests) {
    validate(r.params);
    body.push_back(request_json(r.latex, r.params));
  }
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_seconds_);
  cli.set_read_timeout(timeout_seconds_ * 4);
  auto res = cli.Post("/render/batch", body.dump(), "application/json");
  if (!res) throw IoError("render service at " + base_url_ + " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw IoError("render service returned HTTP " + std::to_string(res->status) + ": " + res->body);
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed batch reply: ") + e.what());
  }
  if (!reply.is_array() || reply.size() != requests.size()) throw IoError("batch reply does not match request count");
  std::vector<RenderResult> out;
  for (const auto& item : reply) {
    if (item.contains("png")) {
      const auto bytes = base64_decode(item.at("png").get<std::string>());
      out.push_back({decode_png(bytes), {}});
    } else {
      out.push_back({std::nullopt, item.value("error", std::string("rejected"))});
    }
  }
  return out;
}

std::unique_ptr<RendererBackend> make_renderer(const std::string& spec) {
  if (spec == "stub") return std::make_unique<StubRenderer>();
  if (spec == "http") {
    const char* url = std::getenv("RENDER_URL");
    if (!url || !*url) throw ConfigError("renderer 'http' needs RENDER_URL to be set");
    return std::make_unique<HttpRenderer>(url);
  }
  if (spec.rfind("http:", 0) == 0) return std::make_unique<HttpRenderer>(spec.substr(5));
  throw ConfigError("unknown renderer '" + spec + "' (expected stub or http:<url>)");
}

GrayImage render(const std::string& latex, const RenderParams& params, const RendererBackend& backend) {
  if (latex.find_first_not_of(" \t\r\n") == std::string::npos) throw RenderFailure("empty formula");
  return normalize_intensity(backend.render(latex, params));
}

GrayImage render_handwritten(const std::string& latex, Rng& rng, int symbol_height, int padding) {
  if (latex.find_first_not_of(" \t\r\n") == std::string::npos) throw RenderFailure("empty formula");
  constexpr int kLayoutSize = 32;
  const StrokeSet strokes = synthesize_strokes(latex, rng, kLayoutSize);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& line : strokes.strokes)
    for (const auto& p : line) {
      lo = std::min(lo, p.y);
      hi = std::max(hi, p.y);
    }
  // Keep the symbol scale fixed so taller formulas (fractions, scripts) give taller images.
  const int target = std::max(8, static_cast<int>(std::lround((hi - lo) * symbol_height / kLayoutSize)));
  const double line_width = std::max(1.5, symbol_height / 14.0);
  return pad(rasterize_strokes(strokes, target, line_width), padding);
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<unsigned char>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    if (i + 2 < bytes.size()) v |= bytes[i + 2];
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kB64[v & 63] : '=';
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  std::vector<unsigned char> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
    const char* p = std::strchr(kB64, c);
    if (!p || !*p) throw IoError("invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(p - kB64);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

}  // namespace fgan::image
