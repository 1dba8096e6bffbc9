#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fgan/corpus/record.hpp"
#include "fgan/image/render.hpp"

namespace fgan::metrics {

struct GridOptions {
  int height = 128;  // row height; each rendered input is scaled to it
  int gutter = 8;    // background pixels between the two columns and between rows
  DomainLabel target = DomainLabel::Handwritten;
  std::uint64_t seed = 0;
};

struct GridLayout {
  int rows = 0;
  int cols = 2;
  int column_width = 0;  // widest scaled input
  int width = 0;         // 2 * column_width + gutter
  int height = 0;        // rows * height + (rows - 1) * gutter
};

/// Writes a PNG whose row i shows formula i rendered (left) and translated by the generator
/// (right). Inputs are scaled to the row height and left-aligned in their column.
GridLayout emit_sample_grid(const std::filesystem::path& generator_checkpoint, const std::vector<std::string>& formulas,
                            const std::filesystem::path& out, const image::RendererBackend& renderer,
                            const GridOptions& options = {});

}  // namespace fgan::metrics
