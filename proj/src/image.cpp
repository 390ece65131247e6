#include "tinstitch/image.hpp"

#include "tinstitch/error.hpp"
#include "tinstitch/ops.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>

namespace tinstitch {

std::uint8_t unit_to_byte(float v) noexcept
{
  const float c = std::clamp(v, 0.f, 1.f);
  return static_cast<std::uint8_t>(std::lround(c * 255.f));
}

Image load_png(const std::filesystem::path& path)
{
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp)
    throw LoadError(LoadErrorKind::Io, "cannot open image " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
  {
    std::fclose(fp);
    throw LoadError(LoadErrorKind::BadMagic, path.string() + " is not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info)
  {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::fclose(fp);
    throw LoadError(LoadErrorKind::Io, "libpng initialisation failed");
  }

  Image image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png)))
  {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw LoadError(LoadErrorKind::Truncated, "corrupt PNG " + path.string());
  }

  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16)
    png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA)
    png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_tRNS_to_alpha(png), png_set_strip_alpha(png);
  png_read_update_info(png, info);

  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  image.rgb.resize(image.width * image.height * 3);
  rows.resize(image.height);
  for (std::size_t y = 0; y < image.height; ++y)
    rows[y] = image.rgb.data() + y * image.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return image;
}

void save_png(const Image& image, const std::filesystem::path& path)
{
  PngRowWriter writer(path);
  writer.begin(image.width, image.height);
  writer.write_rows(0, image.height, image.rgb);
  writer.finish();
}

Tensor image_to_tensor(const Image& image)
{
  Tensor out;
  image_region_to_tensor(image, {0, 0, image.width, image.height}, out);
  return out;
}

void image_region_to_tensor(const Image& image, const Rect& region, Tensor& out, std::size_t batch_index)
{
  if (region.right() > image.width || region.bottom() > image.height || region.area() == 0)
    throw ShapeError("region " + to_string(region) + " outside " + std::to_string(image.width) + "x" +
                     std::to_string(image.height) + " image");
  if (batch_index == 0 && (out.n() == 0 || out.c() != 3 || out.h() != region.h || out.w() != region.w))
    out.reshape({1, 3, region.h, region.w});
  if (out.c() != 3 || out.h() != region.h || out.w() != region.w || batch_index >= out.n())
    throw ShapeError("destination " + to_string(out.shape()) + " does not fit region " + to_string(region));
  for (std::size_t c = 0; c < 3; ++c)
  {
    float* dst = out.plane(batch_index, c);
    for (std::size_t y = 0; y < region.h; ++y)
    {
      const std::uint8_t* src = image.rgb.data() + ((region.y + y) * image.width + region.x) * 3 + c;
      for (std::size_t x = 0; x < region.w; ++x)
        dst[y * region.w + x] = byte_to_unit(src[x * 3]);
    }
  }
}

Tensor image_resize_to_tensor(const Image& image, std::size_t out_h, std::size_t out_w)
{
  if (out_h < 1 || out_w < 1)
    throw ShapeError("resize target must be at least 1x1");
  if (image.width == 0 || image.height == 0)
    throw ShapeError("resize of empty image");
  Tensor out({1, 3, out_h, out_w});
  const auto ty = detail::bilinear_taps(image.height, out_h);
  const auto tx = detail::bilinear_taps(image.width, out_w);
  const std::size_t W = image.width;
  const bool same = out_h == image.height && out_w == image.width;
  for (std::size_t c = 0; c < 3; ++c)
  {
    float* dst = out.plane(0, c);
    for (std::size_t y = 0; y < out_h; ++y)
    {
      const std::uint8_t* r0 = image.rgb.data() + ty[y].i0 * W * 3 + c;
      const std::uint8_t* r1 = image.rgb.data() + ty[y].i1 * W * 3 + c;
      for (std::size_t x = 0; x < out_w; ++x)
      {
        if (same)
        {
          dst[y * out_w + x] = byte_to_unit(r0[x * 3]);
          continue;
        }
        const std::size_t a = tx[x].i0 * 3;
        const std::size_t b = tx[x].i1 * 3;
        dst[y * out_w + x] = detail::bilerp(byte_to_unit(r0[a]), byte_to_unit(r0[b]), byte_to_unit(r1[a]),
                                            byte_to_unit(r1[b]), tx[x].frac, ty[y].frac);
      }
    }
  }
  return out;
}

Image tensor_to_image(const Tensor& t, std::size_t n)
{
  if (t.c() != 3 || n >= t.n())
    throw ShapeError("expected an RGB tensor, got " + to_string(t.shape()));
  Image image(t.w(), t.h());
  for (std::size_t c = 0; c < 3; ++c)
  {
    const float* src = t.plane(n, c);
    for (std::size_t i = 0; i < t.h() * t.w(); ++i)
      image.rgb[i * 3 + c] = unit_to_byte(src[i]);
  }
  return image;
}

void ImageSink::begin(std::size_t width, std::size_t height)
{
  image_ = Image(width, height);
}

void ImageSink::write_rows(std::size_t first, std::size_t count, std::span<const std::uint8_t> rows)
{
  if (first + count > image_.height || rows.size() < count * image_.width * 3)
    throw ShapeError("row band outside the sink image");
  std::copy_n(rows.begin(), count * image_.width * 3, image_.rgb.begin() + first * image_.width * 3);
}

PngRowWriter::PngRowWriter(std::filesystem::path path)
  : path_(std::move(path))
{
}

PngRowWriter::~PngRowWriter()
{
  release();
}

void PngRowWriter::release() noexcept
{
  if (png_)
  {
    auto* png = static_cast<png_structp>(png_);
    auto* info = static_cast<png_infop>(info_);
    png_destroy_write_struct(&png, &info);
    png_ = nullptr;
    info_ = nullptr;
  }
  if (file_)
  {
    std::fclose(file_);
    file_ = nullptr;
  }
}

void PngRowWriter::begin(std::size_t width, std::size_t height)
{
  release();
  file_ = std::fopen(path_.c_str(), "wb");
  if (!file_)
    throw LoadError(LoadErrorKind::Io, "cannot write " + path_.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  png_ = png;
  info_ = info;
  if (!info)
  {
    release();
    throw LoadError(LoadErrorKind::Io, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png)))
  {
    release();
    throw LoadError(LoadErrorKind::Io, "PNG header write failed for " + path_.string());
  }
  png_init_io(png, file_);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  width_ = width;
  height_ = height;
  next_row_ = 0;
}

void PngRowWriter::write_rows(std::size_t first, std::size_t count, std::span<const std::uint8_t> rows)
{
  if (!png_)
    throw StateError("PngRowWriter::write_rows before begin");
  if (first != next_row_ || first + count > height_ || rows.size() < count * width_ * 3)
    throw ShapeError("PNG rows must arrive in order");
  auto* png = static_cast<png_structp>(png_);
  if (setjmp(png_jmpbuf(png)))
  {
    release();
    throw LoadError(LoadErrorKind::Io, "PNG row write failed for " + path_.string());
  }
  for (std::size_t r = 0; r < count; ++r)
    png_write_row(png, const_cast<png_bytep>(rows.data() + r * width_ * 3));
  next_row_ += count;
}

void PngRowWriter::finish()
{
  if (!png_)
    return;
  if (next_row_ != height_)
    throw StateError("PngRowWriter finished after " + std::to_string(next_row_) + " of " +
                     std::to_string(height_) + " rows");
  auto* png = static_cast<png_structp>(png_);
  if (setjmp(png_jmpbuf(png)))
  {
    release();
    throw LoadError(LoadErrorKind::Io, "PNG finalisation failed for " + path_.string());
  }
  png_write_end(png, nullptr);
  release();
}

} // namespace tinstitch
