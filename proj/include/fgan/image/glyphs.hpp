#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace fgan::image {

/// 5x7 dot-matrix glyph stored column-major: bit r of column c is the dot at row r (row 0 on top).
using Glyph = std::array<std::uint8_t, 5>;

/// Looks up the glyph for a token. Printable ASCII and common commands have fixed designs;
/// anything else gets a stable pseudo-random pattern derived from the token text.
Glyph glyph_for(std::string_view token);

/// True when the glyph table has a hand-designed entry for the token.
bool has_designed_glyph(std::string_view token);

inline bool glyph_dot(const Glyph& g, int row, int col) {
  return row >= 0 && row < 7 && col >= 0 && col < 5 && ((g[col] >> row) & 1u);
}

}  // namespace fgan::image
