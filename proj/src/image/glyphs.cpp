#include "fgan/image/glyphs.hpp"

#include <map>
#include <string>

namespace fgan::image {
namespace {

// Printable ASCII 0x20..0x7E.
constexpr std::array<Glyph, 95> kAscii = {{
    {0x00, 0x00, 0x00, 0x00, 0x00}, {0x00, 0x00, 0x5F, 0x00, 0x00}, {0x00, 0x07, 0x00, 0x07, 0x00},
    {0x14, 0x7F, 0x14, 0x7F, 0x14}, {0x24, 0x2A, 0x7F, 0x2A, 0x12}, {0x23, 0x13, 0x08, 0x64, 0x62},
    {0x36, 0x49, 0x55, 0x22, 0x50}, {0x00, 0x05, 0x03, 0x00, 0x00}, {0x00, 0x1C, 0x22, 0x41, 0x00},
    {0x00, 0x41, 0x22, 0x1C, 0x00}, {0x08, 0x2A, 0x1C, 0x2A, 0x08}, {0x08, 0x08, 0x3E, 0x08, 0x08},
    {0x00, 0x50, 0x30, 0x00, 0x00}, {0x08, 0x08, 0x08, 0x08, 0x08}, {0x00, 0x60, 0x60, 0x00, 0x00},
    {0x20, 0x10, 0x08, 0x04, 0x02}, {0x3E, 0x51, 0x49, 0x45, 0x3E}, {0x00, 0x42, 0x7F, 0x40, 0x00},
    {0x42, 0x61, 0x51, 0x49, 0x46}, {0x21, 0x41, 0x45, 0x4B, 0x31}, {0x18, 0x14, 0x12, 0x7F, 0x10},
    {0x27, 0x45, 0x45, 0x45, 0x39}, {0x3C, 0x4A, 0x49, 0x49, 0x30}, {0x01, 0x71, 0x09, 0x05, 0x03},
    {0x36, 0x49, 0x49, 0x49, 0x36}, {0x06, 0x49, 0x49, 0x29, 0x1E}, {0x00, 0x36, 0x36, 0x00, 0x00},
    {0x00, 0x56, 0x36, 0x00, 0x00}, {0x08, 0x14, 0x22, 0x41, 0x00}, {0x14, 0x14, 0x14, 0x14, 0x14},
    {0x00, 0x41, 0x22, 0x14, 0x08}, {0x02, 0x01, 0x51, 0x09, 0x06}, {0x32, 0x49, 0x79, 0x41, 0x3E},
    {0x7E, 0x11, 0x11, 0x11, 0x7E}, {0x7F, 0x49, 0x49, 0x49, 0x36}, {0x3E, 0x41, 0x41, 0x41, 0x22},
    {0x7F, 0x41, 0x41, 0x22, 0x1C}, {0x7F, 0x49, 0x49, 0x49, 0x41}, {0x7F, 0x09, 0x09, 0x09, 0x01},
    {0x3E, 0x41, 0x49, 0x49, 0x7A}, {0x7F, 0x08, 0x08, 0x08, 0x7F}, {0x00, 0x41, 0x7F, 0x41, 0x00},
    {0x20, 0x40, 0x41, 0x3F, 0x01}, {0x7F, 0x08, 0x14, 0x22, 0x41}, {0x7F, 0x40, 0x40, 0x40, 0x40},
    {0x7F, 0x02, 0x0C, 0x02, 0x7F}, {0x7F, 0x04, 0x08, 0x10, 0x7F}, {0x3E, 0x41, 0x41, 0x41, 0x3E},
    {0x7F, 0x09, 0x09, 0x09, 0x06}, {0x3E, 0x41, 0x51, 0x21, 0x5E}, {0x7F, 0x09, 0x19, 0x29, 0x46},
    {0x46, 0x49, 0x49, 0x49, 0x31}, {0x01, 0x01, 0x7F, 0x01, 0x01}, {0x3F, 0x40, 0x40, 0x40, 0x3F},
    {0x1F, 0x20, 0x40, 0x20, 0x1F}, {0x3F, 0x40, 0x38, 0x40, 0x3F}, {0x63, 0x14, 0x08, 0x14, 0x63},
    {0x07, 0x08, 0x70, 0x08, 0x07}, {0x61, 0x51, 0x49, 0x45, 0x43}, {0x00, 0x7F, 0x41, 0x41, 0x00},
    {0x02, 0x04, 0x08, 0x10, 0x20}, {0x00, 0x41, 0x41, 0x7F, 0x00}, {0x04, 0x02, 0x01, 0x02, 0x04},
    {0x40, 0x40, 0x40, 0x40, 0x40}, {0x00, 0x01, 0x02, 0x04, 0x00}, {0x20, 0x54, 0x54, 0x54, 0x78},
    {0x7F, 0x48, 0x44, 0x44, 0x38}, {0x38, 0x44, 0x44, 0x44, 0x20}, {0x38, 0x44, 0x44, 0x48, 0x7F},
    {0x38, 0x54, 0x54, 0x54, 0x18}, {0x08, 0x7E, 0x09, 0x01, 0x02}, {0x0C, 0x52, 0x52, 0x52, 0x3E},
    {0x7F, 0x08, 0x04, 0x04, 0x78}, {0x00, 0x44, 0x7D, 0x40, 0x00}, {0x20, 0x40, 0x44, 0x3D, 0x00},
    {0x7F, 0x10, 0x28, 0x44, 0x00}, {0x00, 0x41, 0x7F, 0x40, 0x00}, {0x7C, 0x04, 0x18, 0x04, 0x78},
    {0x7C, 0x08, 0x04, 0x04, 0x78}, {0x38, 0x44, 0x44, 0x44, 0x38}, {0x7C, 0x14, 0x14, 0x14, 0x08},
    {0x08, 0x14, 0x14, 0x18, 0x7C}, {0x7C, 0x08, 0x04, 0x04, 0x08}, {0x48, 0x54, 0x54, 0x54, 0x20},
    {0x04, 0x3F, 0x44, 0x40, 0x20}, {0x3C, 0x40, 0x40, 0x20, 0x7C}, {0x1C, 0x20, 0x40, 0x20, 0x1C},
    {0x3C, 0x40, 0x30, 0x40, 0x3C}, {0x44, 0x28, 0x10, 0x28, 0x44}, {0x0C, 0x50, 0x50, 0x50, 0x3C},
    {0x44, 0x64, 0x54, 0x4C, 0x44}, {0x00, 0x08, 0x36, 0x41, 0x00}, {0x00, 0x00, 0x7F, 0x00, 0x00},
    {0x00, 0x41, 0x36, 0x08, 0x00}, {0x08, 0x04, 0x08, 0x10, 0x08},
}};

const std::map<std::string, Glyph, std::less<>>& command_glyphs() {
  static const std::map<std::string, Glyph, std::less<>> table = {
      {"\\alpha", {0x38, 0x44, 0x44, 0x38, 0x44}}, {"\\beta", {0x7E, 0x25, 0x25, 0x25, 0x1A}},
      {"\\gamma", {0x04, 0x08, 0x70, 0x08, 0x04}}, {"\\delta", {0x30, 0x4B, 0x4D, 0x49, 0x30}},
      {"\\epsilon", {0x38, 0x54, 0x54, 0x44, 0x00}}, {"\\varepsilon", {0x28, 0x54, 0x54, 0x44, 0x00}},
      {"\\theta", {0x3E, 0x49, 0x49, 0x49, 0x3E}}, {"\\lambda", {0x40, 0x31, 0x0E, 0x30, 0x40}},
      {"\\mu", {0x7C, 0x20, 0x20, 0x10, 0x3C}}, {"\\pi", {0x04, 0x7C, 0x04, 0x7C, 0x04}},
      {"\\sigma", {0x38, 0x44, 0x44, 0x4C, 0x34}}, {"\\phi", {0x18, 0x24, 0x7F, 0x24, 0x18}},
      {"\\omega", {0x3C, 0x40, 0x38, 0x40, 0x3C}}, {"\\tau", {0x04, 0x3C, 0x44, 0x04, 0x00}},
      {"\\rho", {0x78, 0x14, 0x14, 0x14, 0x08}}, {"\\eta", {0x7C, 0x08, 0x04, 0x04, 0x78}},
      {"\\Delta", {0x70, 0x4C, 0x43, 0x4C, 0x70}}, {"\\Gamma", {0x7F, 0x01, 0x01, 0x01, 0x03}},
      {"\\Sigma", {0x41, 0x63, 0x55, 0x49, 0x41}}, {"\\Omega", {0x5E, 0x61, 0x01, 0x61, 0x5E}},
      {"\\Pi", {0x01, 0x7F, 0x01, 0x7F, 0x01}}, {"\\Phi", {0x1C, 0x22, 0x7F, 0x22, 0x1C}},
      {"\\sum", {0x41, 0x63, 0x55, 0x49, 0x41}}, {"\\prod", {0x01, 0x7F, 0x01, 0x7F, 0x01}},
      {"\\int", {0x40, 0x40, 0x3E, 0x01, 0x01}}, {"\\infty", {0x1C, 0x22, 0x1C, 0x22, 0x1C}},
      {"\\partial", {0x30, 0x4A, 0x4D, 0x49, 0x3E}}, {"\\nabla", {0x07, 0x19, 0x61, 0x19, 0x07}},
      {"\\times", {0x22, 0x14, 0x08, 0x14, 0x22}}, {"\\div", {0x08, 0x08, 0x2A, 0x08, 0x08}},
      {"\\pm", {0x24, 0x24, 0x2F, 0x24, 0x24}}, {"\\mp", {0x12, 0x12, 0x7A, 0x12, 0x12}},
      {"\\cdot", {0x00, 0x00, 0x08, 0x00, 0x00}}, {"\\leq", {0x50, 0x58, 0x54, 0x52, 0x51}},
      {"\\geq", {0x51, 0x52, 0x54, 0x58, 0x50}}, {"\\neq", {0x14, 0x34, 0x1C, 0x16, 0x14}},
      {"\\approx", {0x12, 0x09, 0x12, 0x24, 0x12}}, {"\\equiv", {0x2A, 0x2A, 0x2A, 0x2A, 0x2A}},
      {"\\to", {0x08, 0x08, 0x2A, 0x1C, 0x08}}, {"\\rightarrow", {0x08, 0x08, 0x2A, 0x1C, 0x08}},
      {"\\leftarrow", {0x08, 0x1C, 0x2A, 0x08, 0x08}}, {"\\in", {0x1C, 0x2A, 0x49, 0x49, 0x41}},
      {"\\ldots", {0x40, 0x00, 0x40, 0x00, 0x40}}, {"\\cdots", {0x08, 0x00, 0x08, 0x00, 0x08}},
      {"\\dots", {0x40, 0x00, 0x40, 0x00, 0x40}}, {"\\forall", {0x03, 0x1C, 0x64, 0x1C, 0x03}},
      {"\\exists", {0x41, 0x49, 0x49, 0x49, 0x7F}}, {"\\{", {0x00, 0x08, 0x36, 0x41, 0x00}},
      {"\\}", {0x00, 0x41, 0x36, 0x08, 0x00}}, {"\\|", {0x00, 0x7F, 0x00, 0x7F, 0x00}},
      {"\\prime", {0x00, 0x04, 0x03, 0x00, 0x00}}, {"\\lt", {0x08, 0x14, 0x22, 0x41, 0x00}},
      {"\\gt", {0x00, 0x41, 0x22, 0x14, 0x08}}, {"\\sqrt", {0x10, 0x20, 0x7F, 0x01, 0x01}},
  };
  return table;
}

Glyph hashed_glyph(std::string_view token) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ull;
  }
  Glyph g{};
  for (int c = 0; c < 5; ++c) {
    h ^= h >> 29;
    h *= 0xbf58476d1ce4e5b9ull;
    // A closed frame with a hashed interior keeps every column non-empty.
    const std::uint8_t interior = static_cast<std::uint8_t>((h >> 17) & 0x3E);
    g[c] = (c == 0 || c == 4) ? 0x7F : static_cast<std::uint8_t>(0x41 | interior);
  }
  return g;
}

}  // namespace

bool has_designed_glyph(std::string_view token) {
  if (token.size() == 1 && token[0] >= 0x20 && token[0] <= 0x7E) return true;
  return command_glyphs().find(token) != command_glyphs().end();
}

Glyph glyph_for(std::string_view token) {
  if (token.size() == 1 && token[0] >= 0x20 && token[0] <= 0x7E) return kAscii[token[0] - 0x20];
  if (auto it = command_glyphs().find(token); it != command_glyphs().end()) return it->second;
  if (token.size() == 2 && token[0] == '\\' && token[1] >= 0x20 && token[1] <= 0x7E) return kAscii[token[1] - 0x20];
  return hashed_glyph(token);
}

}  // namespace fgan::image
