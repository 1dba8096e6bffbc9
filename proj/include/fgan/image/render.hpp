#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fgan/core/random.hpp"
#include "fgan/image/gray_image.hpp"
#include "fgan/image/layout.hpp"

namespace fgan::image {

inline constexpr std::array<const char*, 7> kFonts = {"mathsf", "mathtt", "mathit", "mathbf",
                                                       "mathrm", "mathnormal", "textstyle"};
inline constexpr int kMinPadding = 0, kMaxPadding = 15;
inline constexpr int kMinFontSize = 16, kMaxFontSize = 50;

struct RenderParams {
  std::string font = "mathrm";
  int padding = 0;
  int font_size = 32;

  bool operator==(const RenderParams&) const = default;
};

/// Throws ConfigError when a field is outside its allowed set.
void validate(const RenderParams& params);

/// Each field drawn uniformly from its set.
RenderParams sample_render_params(Rng& rng);

struct RenderRequest {
  std::string latex;
  RenderParams params;
};

/// Element of a batch result: an image or the reason the formula was rejected.
struct RenderResult {
  std::optional<GrayImage> image;
  std::string error;
  bool ok() const { return image.has_value(); }
};

class RendererBackend {
 public:
  virtual ~RendererBackend() = default;
  /// Raw backend output; throws RenderFailure when the formula is rejected.
  virtual GrayImage render(const std::string& latex, const RenderParams& params) const = 0;
  /// Element-wise equivalent of render(); the default loops over single calls.
  virtual std::vector<RenderResult> render_batch(const std::vector<RenderRequest>& requests) const;
  virtual std::string name() const = 0;
};

/// In-process renderer over the dot-matrix glyph table. Output is already normalized:
/// ink 1, background 0, exactly `padding` blank pixels around the ink box.
class StubRenderer final : public RendererBackend {
 public:
  GrayImage render(const std::string& latex, const RenderParams& params) const override;
  std::string name() const override { return "stub"; }
};

/// Client of the external render service (`POST /render`, `POST /render/batch`).
class HttpRenderer final : public RendererBackend {
 public:
  /// base_url such as "http://localhost:8321".
  explicit HttpRenderer(std::string base_url, int timeout_seconds = 30);
  GrayImage render(const std::string& latex, const RenderParams& params) const override;
  std::vector<RenderResult> render_batch(const std::vector<RenderRequest>& requests) const override;
  std::string name() const override { return "http:" + base_url_; }

 private:
  std::string base_url_;
  int timeout_seconds_;
};

/// "stub", "http:<url>", or "http" (URL from the RENDER_URL environment variable).
std::unique_ptr<RendererBackend> make_renderer(const std::string& spec);

/// Renders and normalizes intensities. Empty or whitespace-only input is a RenderFailure.
GrayImage render(const std::string& latex, const RenderParams& params, const RendererBackend& backend);

/// Handwritten-domain image: synthetic pen strokes with a glyph cell of about `symbol_height`
/// pixels and `padding` blank pixels on every side.
GrayImage render_handwritten(const std::string& latex, Rng& rng, int symbol_height = 32, int padding = 4);

std::string base64_encode(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

}  // namespace fgan::image
