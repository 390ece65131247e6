#pragma once

#include "tinstitch/rect.hpp"
#include "tinstitch/tensor.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <vector>

namespace tinstitch {

// 8-bit interleaved RGB pixels. Not tracked by MemoryTracker: content and
// output pixel buffers are the part of the working set that is allowed to
// scale with resolution (and could be streamed).
struct Image
{
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return rgb[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return rgb[(y * width + x) * 3 + c]; }
};

inline float byte_to_unit(std::uint8_t v) noexcept { return static_cast<float>(v) / 255.f; }
std::uint8_t unit_to_byte(float v) noexcept;

Image load_png(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

// 1x3xHxW tensor of the whole image.
Tensor image_to_tensor(const Image& image);
// 1x3xhxw tensor of a sub-rectangle, written into `out` (capacity reused).
void image_region_to_tensor(const Image& image, const Rect& region, Tensor& out, std::size_t batch_index = 0);
// Bilinear (half-pixel) resize straight from the 8-bit buffer; equals
// resize_bilinear(image_to_tensor(image), h, w) bit for bit.
Tensor image_resize_to_tensor(const Image& image, std::size_t out_h, std::size_t out_w);
// Expects a 1x3xHxW (or batch slot `n`) tensor.
Image tensor_to_image(const Tensor& t, std::size_t n = 0);

// Receives the assembled output one horizontal band at a time, top to bottom.
class RowSink
{
public:
  virtual ~RowSink() = default;
  virtual void begin(std::size_t width, std::size_t height) = 0;
  // `rows` holds `count` full-width RGB rows starting at row `first`.
  virtual void write_rows(std::size_t first, std::size_t count, std::span<const std::uint8_t> rows) = 0;
  virtual void finish() = 0;
};

class ImageSink final : public RowSink
{
public:
  void begin(std::size_t width, std::size_t height) override;
  void write_rows(std::size_t first, std::size_t count, std::span<const std::uint8_t> rows) override;
  void finish() override {}

  const Image& image() const noexcept { return image_; }
  Image take() { return std::move(image_); }

private:
  Image image_;
};

// Streams rows into a PNG file without holding the full image.
class PngRowWriter final : public RowSink
{
public:
  explicit PngRowWriter(std::filesystem::path path);
  ~PngRowWriter() override;
  PngRowWriter(const PngRowWriter&) = delete;
  PngRowWriter& operator=(const PngRowWriter&) = delete;

  void begin(std::size_t width, std::size_t height) override;
  void write_rows(std::size_t first, std::size_t count, std::span<const std::uint8_t> rows) override;
  void finish() override;

private:
  void release() noexcept;

  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  void* png_ = nullptr;
  void* info_ = nullptr;
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t next_row_ = 0;
};

} // namespace tinstitch
