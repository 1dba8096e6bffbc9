#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "fgan/core/error.hpp"
#include "fgan/core/tensor.hpp"

namespace fgan::image {

/// Single-channel image with intensities in [0,1]: background near 0, strokes near 1.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width, float fill = 0.0f);
  GrayImage(int height, int width, std::vector<float> pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  float& operator()(int y, int x) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  float operator()(int y, int x) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  /// Zero outside the image.
  float at_or_zero(int y, int x) const;

  std::span<float> pixels() { return pixels_; }
  std::span<const float> pixels() const { return pixels_; }

  float min_value() const;
  float max_value() const;
  /// Fraction of pixels with intensity above the threshold.
  double foreground_fraction(float threshold = 0.5f) const;
  void clamp01();

  bool operator==(const GrayImage&) const = default;

 private:
  int height_ = 0, width_ = 0;
  std::vector<float> pixels_;
};

/// Adds `top/bottom/left/right` rows/columns of the fill value.
GrayImage pad(const GrayImage& img, int top, int bottom, int left, int right, float fill = 0.0f);
/// Pads uniformly.
inline GrayImage pad(const GrayImage& img, int border, float fill = 0.0f) {
  return pad(img, border, border, border, border, fill);
}
GrayImage crop(const GrayImage& img, int y0, int x0, int height, int width);
/// Pads on the right/bottom so both dimensions are multiples of `multiple`.
GrayImage pad_to_multiple(const GrayImage& img, int multiple);

/// [1,1,H,W] tensor for the network.
Tensor to_tensor(const GrayImage& img);
/// Stacks images of equal height into [N,1,H,Wmax], right-padding each with background.
Tensor batch_to_tensor(std::span<const GrayImage> imgs, int pad_multiple = 1);
/// Sample n of an [N,1,H,W] tensor, cropped to `width` columns (all columns when width <= 0).
GrayImage from_tensor(const Tensor& t, int n = 0, int width = -1);

/// 8-bit grayscale PNG; intensities are pixel/255.
void write_png(const GrayImage& img, const std::filesystem::path& path);
std::vector<unsigned char> encode_png(const GrayImage& img);
/// Any PNG; colour is converted to luminance and transparency is composited onto white.
GrayImage read_png(const std::filesystem::path& path);
GrayImage decode_png(std::span<const unsigned char> bytes);

}  // namespace fgan::image
