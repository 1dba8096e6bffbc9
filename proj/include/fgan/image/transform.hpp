#pragma once

#include <optional>

#include "fgan/core/random.hpp"
#include "fgan/image/gray_image.hpp"

namespace fgan::image {

/// Concrete values of one augmentation.
struct AugmentParams {
  double rotation_deg = 0.0;  // positive turns content counter-clockwise on screen
  double shear = 0.0;         // x += shear * (y - centre_y)
  int border_pad = 10;
  double aspect_scale = 1.0;  // horizontal stretch

  static AugmentParams identity(int pad) { return {0.0, 0.0, pad, 1.0}; }
};

/// Ranges the random augmentation samples from.
struct AugmentRanges {
  double max_rotation_deg = 4.0;
  double max_shear = 0.1;
  int min_pad = 10, max_pad = 20;
  double min_aspect = 0.9, max_aspect = 1.1;
};

/// Throws ConfigError for ranges outside the allowed envelope (rotation within 4 degrees,
/// padding within [10, 20]) or with inverted bounds.
void validate(const AugmentRanges& ranges);

AugmentParams sample_augment_params(Rng& rng, const AugmentRanges& ranges = {});

/// Applies stretch, shear and rotation about the image centre with bilinear sampling, then
/// surrounds the transformed content's bounding box with border_pad zero pixels.
GrayImage augment(const GrayImage& img, const AugmentParams& params);

/// augment() with parameters drawn from rng.
GrayImage augment(const GrayImage& img, const AugmentRanges& ranges, Rng& rng);

/// Forward map of augment(): where a point of the input (pixel-centre coordinates, e.g. x+0.5)
/// lands in the output. Exposed so callers can track annotations through an augmentation.
struct AugmentGeometry {
  int out_height = 0, out_width = 0;
  double m[2][2]{};      // input offset from centre -> output offset from centre
  double in_cx = 0, in_cy = 0, out_cx = 0, out_cy = 0;
  std::pair<double, double> forward(double x, double y) const;
};
AugmentGeometry augment_geometry(int height, int width, const AugmentParams& params);

/// Maps background to 0 and ink to 1. Images whose ink is darker than their background are
/// inverted first. The background level is the lowest value in the most populated of 256
/// histogram bins; the ink level is the 99th-percentile value (nearest rank) among pixels
/// above the background.
/// Images with fewer than two distinct values are returned unchanged.
GrayImage normalize_intensity(const GrayImage& img);

/// Bilinear resize with pixel-centre alignment.
GrayImage resize_bilinear(const GrayImage& img, int height, int width);

/// Aspect-preserving rescale to target_height; nullopt (rejected) when the width would
/// exceed max_width.
std::optional<GrayImage> resize_for_training(const GrayImage& img, int target_height, int max_width);

}  // namespace fgan::image
