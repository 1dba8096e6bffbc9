#include "fgan/image/gray_image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace fgan::image {

GrayImage::GrayImage(int height, int width, float fill)
    : height_(height), width_(width), pixels_(static_cast<std::size_t>(std::max(height, 0)) * std::max(width, 0), fill) {
  if (height < 1 || width < 1)
    throw ShapeMismatch("image dimensions must be positive, got " + std::to_string(height) + "x" + std::to_string(width));
}

GrayImage::GrayImage(int height, int width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (height < 1 || width < 1) throw ShapeMismatch("image dimensions must be positive");
  if (pixels_.size() != static_cast<std::size_t>(height) * width) throw ShapeMismatch("pixel count mismatch");
}

float GrayImage::at_or_zero(int y, int x) const {
  if (y < 0 || x < 0 || y >= height_ || x >= width_) return 0.0f;
  return (*this)(y, x);
}

float GrayImage::min_value() const { return *std::min_element(pixels_.begin(), pixels_.end()); }
float GrayImage::max_value() const { return *std::max_element(pixels_.begin(), pixels_.end()); }

double GrayImage::foreground_fraction(float threshold) const {
  std::size_t n = 0;
  for (float v : pixels_) n += v > threshold;
  return static_cast<double>(n) / static_cast<double>(pixels_.size());
}

void GrayImage::clamp01() {
  for (float& v : pixels_) v = std::clamp(v, 0.0f, 1.0f);
}

GrayImage pad(const GrayImage& img, int top, int bottom, int left, int right, float fill) {
  GrayImage out(img.height() + top + bottom, img.width() + left + right, fill);
  for (int y = 0; y < img.height(); ++y)
    std::copy_n(&img.pixels()[static_cast<std::size_t>(y) * img.width()], img.width(),
                &out.pixels()[static_cast<std::size_t>(y + top) * out.width() + left]);
  return out;
}

GrayImage crop(const GrayImage& img, int y0, int x0, int height, int width) {
  if (y0 < 0 || x0 < 0 || y0 + height > img.height() || x0 + width > img.width())
    throw ShapeMismatch("crop window outside image");
  GrayImage out(height, width);
  for (int y = 0; y < height; ++y)
    std::copy_n(&img.pixels()[static_cast<std::size_t>(y + y0) * img.width() + x0], width,
                &out.pixels()[static_cast<std::size_t>(y) * width]);
  return out;
}

GrayImage pad_to_multiple(const GrayImage& img, int multiple) {
  auto up = [multiple](int v) { return (v + multiple - 1) / multiple * multiple; };
  return pad(img, 0, up(img.height()) - img.height(), 0, up(img.width()) - img.width());
}

Tensor to_tensor(const GrayImage& img) {
  Tensor t({1, 1, img.height(), img.width()});
  std::copy(img.pixels().begin(), img.pixels().end(), t.data());
  return t;
}

Tensor batch_to_tensor(std::span<const GrayImage> imgs, int pad_multiple) {
  if (imgs.empty()) throw EmptyBatch("no images to batch");
  const int H = imgs[0].height();
  int W = 0;
  for (const auto& im : imgs) {
    if (im.height() != H) throw ShapeMismatch("batch images must share a height");
    W = std::max(W, im.width());
  }
  W = (W + pad_multiple - 1) / pad_multiple * pad_multiple;
  const int Hp = (H + pad_multiple - 1) / pad_multiple * pad_multiple;
  Tensor t({static_cast<int>(imgs.size()), 1, Hp, W});
  for (std::size_t n = 0; n < imgs.size(); ++n)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < imgs[n].width(); ++x) t.at(static_cast<int>(n), 0, y, x) = imgs[n](y, x);
  return t;
}

GrayImage from_tensor(const Tensor& t, int n, int width) {
  if (t.rank() != 4 || t.dim(1) != 1) throw ShapeMismatch("from_tensor expects [N,1,H,W], got " + t.shape_string());
  const int H = t.dim(2);
  const int W = width > 0 ? std::min(width, t.dim(3)) : t.dim(3);
  GrayImage out(H, W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) out(y, x) = static_cast<float>(t.at(n, 0, y, x));
  return out;
}

namespace {

std::vector<unsigned char> to_bytes(const GrayImage& img) {
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(img.pixels()[i], 0.0f, 1.0f) * 255.0f));
  return bytes;
}

GrayImage finish_read(png_image& image) {
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&image, &white, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("PNG decode failed: " + msg);
  }
  GrayImage out(static_cast<int>(image.height), static_cast<int>(image.width));
  for (std::size_t i = 0; i < buffer.size(); ++i) out.pixels()[i] = static_cast<float>(buffer[i]) / 255.0f;
  return out;
}

}  // namespace

std::vector<unsigned char> encode_png(const GrayImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_GRAY;
  const auto bytes = to_bytes(img);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, bytes.data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + image.message);
  std::vector<unsigned char> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, bytes.data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + image.message);
  out.resize(size);
  return out;
}

void write_png(const GrayImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

GrayImage decode_png(std::span<const unsigned char> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw IoError(std::string("PNG header invalid: ") + image.message);
  return finish_read(image);
}

GrayImage read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace fgan::image
