#pragma once

#include "tinstitch/tensor.hpp"

#include <cstddef>
#include <vector>

namespace tinstitch {

struct ConvWeights
{
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t kh = 0;
  std::size_t kw = 0;
  std::vector<float> kernel; // (out, in, kh, kw)
  std::vector<float> bias;   // (out)

  // Throws ConfigError when the arrays disagree with the declared dims.
  void validate() const;
};

enum class PadMode
{
  Zero,
  Reflect,
};

struct PadSpec
{
  PadMode mode = PadMode::Zero;
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t top = 0;
  std::size_t bottom = 0;

  static PadSpec uniform(std::size_t p, PadMode mode = PadMode::Zero) { return {mode, p, p, p, p}; }
  bool is_zero() const noexcept { return left == 0 && right == 0 && top == 0 && bottom == 0; }
};

Shape conv2d_output_shape(const Shape& in, const ConvWeights& w, std::size_t stride, const PadSpec& pad);
Shape maxpool2_output_shape(const Shape& in);
Shape pad_output_shape(const Shape& in, const PadSpec& pad);

// Direct convolution, double accumulation. `out` must not alias `in`.
void conv2d(const Tensor& in, const ConvWeights& w, std::size_t stride, const PadSpec& pad, Tensor& out);
Tensor conv2d(const Tensor& in, const ConvWeights& w, std::size_t stride, const PadSpec& pad);

void relu_inplace(Tensor& t);
Tensor relu(const Tensor& in);

// 2x2 max, stride 2. Odd dims are extended by replicating the last row/column.
void maxpool2(const Tensor& in, Tensor& out);
Tensor maxpool2(const Tensor& in);

// Bilinear with half-pixel centres: src = (dst + 0.5) * in / out - 0.5, clamped.
void resize_bilinear(const Tensor& in, std::size_t out_h, std::size_t out_w, Tensor& out);
Tensor resize_bilinear(const Tensor& in, std::size_t out_h, std::size_t out_w);

void resize_nearest(const Tensor& in, std::size_t factor, Tensor& out);
Tensor resize_nearest(const Tensor& in, std::size_t factor);

// Reflect mode mirrors without repeating the edge and needs pad < dim.
void pad(const Tensor& in, const PadSpec& spec, Tensor& out);
Tensor pad(const Tensor& in, const PadSpec& spec);

namespace detail {

struct LinearTap
{
  std::size_t i0;
  std::size_t i1;
  double frac;
};

// Per-destination source taps of the half-pixel bilinear rule along one axis.
std::vector<LinearTap> bilinear_taps(std::size_t in_size, std::size_t out_size);

inline float bilerp(float a, float b, float c, float d, double fx, double fy) noexcept
{
  const double top = (1.0 - fx) * a + fx * b;
  const double bot = (1.0 - fx) * c + fx * d;
  return static_cast<float>((1.0 - fy) * top + fy * bot);
}

} // namespace detail

} // namespace tinstitch
