#include "fixtures.hpp"
#include "oracles.hpp"

#include "tinstitch/error.hpp"
#include "tinstitch/image.hpp"
#include "tinstitch/ops.hpp"

#include <doctest.h>

using namespace tinstitch;

TEST_CASE("byte mapping")
{
  CHECK(byte_to_unit(0) == 0.f);
  CHECK(byte_to_unit(255) == 1.f);
  CHECK(unit_to_byte(-0.5f) == 0);
  CHECK(unit_to_byte(1.7f) == 255);
  CHECK(unit_to_byte(0.5f) == 128);
  for (int v = 0; v < 256; ++v)
    CHECK(unit_to_byte(byte_to_unit(static_cast<std::uint8_t>(v))) == v);
}

TEST_CASE("png round trip")
{
  Image img(37, 21);
  for (std::size_t i = 0; i < img.rgb.size(); ++i)
    img.rgb[i] = static_cast<std::uint8_t>((i * 31 + 7) % 256);
  const std::string path = fixture::scratch_dir("image") + "/a.png";
  save_png(img, path);
  const Image back = load_png(path);
  CHECK(back.width == 37);
  CHECK(back.height == 21);
  CHECK(back.rgb == img.rgb);
  CHECK_THROWS_AS(load_png(path + ".missing"), LoadError);
}

TEST_CASE("streamed png equals the in-memory image")
{
  Image img(19, 40);
  for (std::size_t i = 0; i < img.rgb.size(); ++i)
    img.rgb[i] = static_cast<std::uint8_t>(i * 13 % 251);
  const std::string path = fixture::scratch_dir("image") + "/b.png";
  {
    PngRowWriter w(path);
    w.begin(19, 40);
    for (std::size_t y = 0; y < 40; y += 16)
    {
      const std::size_t n = std::min<std::size_t>(16, 40 - y);
      w.write_rows(y, n, std::span<const std::uint8_t>(img.rgb.data() + y * 19 * 3, n * 19 * 3));
    }
    w.finish();
  }
  CHECK(load_png(path).rgb == img.rgb);
}

TEST_CASE("tensor conversion")
{
  Image img(5, 4);
  for (std::size_t i = 0; i < img.rgb.size(); ++i)
    img.rgb[i] = static_cast<std::uint8_t>(i * 11);
  const Tensor t = image_to_tensor(img);
  CHECK(t.shape() == Shape{1, 3, 4, 5});
  CHECK(t.at(0, 2, 3, 1) == byte_to_unit(img.at(1, 3, 2)));
  CHECK(tensor_to_image(t).rgb == img.rgb);

  Tensor region;
  image_region_to_tensor(img, {1, 2, 3, 2}, region);
  CHECK(region.shape() == Shape{1, 3, 2, 3});
  CHECK(region.at(0, 1, 1, 2) == byte_to_unit(img.at(3, 3, 1)));

  Tensor batch({2, 3, 2, 3});
  image_region_to_tensor(img, {0, 0, 3, 2}, batch, 1);
  CHECK(batch.shape() == Shape{2, 3, 2, 3});
  CHECK(batch.at(1, 0, 1, 2) == byte_to_unit(img.at(2, 1, 0)));
}

TEST_CASE("direct resize equals the tensor resize")
{
  Image img(33, 27);
  for (std::size_t i = 0; i < img.rgb.size(); ++i)
    img.rgb[i] = static_cast<std::uint8_t>((i * 97) % 256);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{10, 12}, {27, 33}, {64, 50}})
  {
    const Tensor a = image_resize_to_tensor(img, h, w);
    const Tensor b = resize_bilinear(image_to_tensor(img), h, w);
    CHECK(oracle::max_abs_diff(a, b) == 0.0);
  }
}
