#include "tinstitch/ops.hpp"

#include "tinstitch/error.hpp"

#include <algorithm>
#include <cmath>

namespace tinstitch {

namespace {

// Maps a padded coordinate to a source coordinate; -1 marks a zero tap.
std::ptrdiff_t map_index(std::ptrdiff_t i, std::ptrdiff_t n, PadMode mode) noexcept
{
  if (i >= 0 && i < n)
    return i;
  if (mode == PadMode::Zero)
    return -1;
  if (i < 0)
    return -i;
  return 2 * (n - 1) - i;
}

void check_reflect(const Shape& in, const PadSpec& pad)
{
  if (pad.mode != PadMode::Reflect)
    return;
  if (pad.left >= in.w || pad.right >= in.w || pad.top >= in.h || pad.bottom >= in.h)
    throw ShapeError("reflect padding must be smaller than the padded dimension (input " +
                     to_string(in) + ")");
}

} // namespace

void ConvWeights::validate() const
{
  if (out_channels < 1 || in_channels < 1 || kh < 1 || kw < 1)
    throw ConfigError("convolution weights need positive dims");
  if (kernel.size() != out_channels * in_channels * kh * kw)
    throw ConfigError("convolution kernel has " + std::to_string(kernel.size()) + " values, expected " +
                      std::to_string(out_channels * in_channels * kh * kw));
  if (bias.size() != out_channels)
    throw ConfigError("convolution bias has " + std::to_string(bias.size()) + " values, expected " +
                      std::to_string(out_channels));
}

Shape conv2d_output_shape(const Shape& in, const ConvWeights& w, std::size_t stride, const PadSpec& pad)
{
  if (in.c != w.in_channels)
    throw ConfigError("conv2d expects " + std::to_string(w.in_channels) + " input channels, got " +
                      std::to_string(in.c));
  if (stride < 1)
    throw ConfigError("conv2d stride must be positive");
  const std::size_t ph = in.h + pad.top + pad.bottom;
  const std::size_t pw = in.w + pad.left + pad.right;
  if (in.h == 0 || in.w == 0 || ph < w.kh || pw < w.kw)
    throw ShapeError("conv2d input " + to_string(in) + " is smaller than the " + std::to_string(w.kh) +
                     "x" + std::to_string(w.kw) + " kernel");
  return {in.n, w.out_channels, (ph - w.kh) / stride + 1, (pw - w.kw) / stride + 1};
}

void conv2d(const Tensor& in, const ConvWeights& w, std::size_t stride, const PadSpec& pad, Tensor& out)
{
  const Shape os = conv2d_output_shape(in.shape(), w, stride, pad);
  check_reflect(in.shape(), pad);
  out.reshape(os);

  const auto H = static_cast<std::ptrdiff_t>(in.h());
  const auto W = static_cast<std::ptrdiff_t>(in.w());
  const auto Wo = static_cast<std::ptrdiff_t>(os.w);
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto pl = static_cast<std::ptrdiff_t>(pad.left);
  const auto pt = static_cast<std::ptrdiff_t>(pad.top);
  const std::size_t kh = w.kh;
  const std::size_t kw = w.kw;

  // For each kx the output columns whose tap lands inside the row.
  std::vector<std::ptrdiff_t> ox_lo(kw), ox_hi(kw);
  for (std::size_t kx = 0; kx < kw; ++kx)
  {
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - pl;
    std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
    std::ptrdiff_t hi = W - off <= 0 ? 0 : (W - off - 1) / s + 1;
    ox_lo[kx] = std::min(lo, Wo);
    ox_hi[kx] = std::clamp(hi, ox_lo[kx], Wo);
  }

  std::vector<double> acc(static_cast<std::size_t>(Wo));
  for (std::size_t n = 0; n < os.n; ++n)
  {
    for (std::size_t oc = 0; oc < os.c; ++oc)
    {
      float* dst_plane = out.plane(n, oc);
      for (std::size_t oy = 0; oy < os.h; ++oy)
      {
        std::fill(acc.begin(), acc.end(), static_cast<double>(w.bias[oc]));
        for (std::size_t ic = 0; ic < w.in_channels; ++ic)
        {
          const float* src_plane = in.plane(n, ic);
          const float* kptr = w.kernel.data() + (oc * w.in_channels + ic) * kh * kw;
          for (std::size_t ky = 0; ky < kh; ++ky)
          {
            const std::ptrdiff_t iy = map_index(static_cast<std::ptrdiff_t>(oy) * s +
                                                  static_cast<std::ptrdiff_t>(ky) - pt,
                                                H, pad.mode);
            if (iy < 0)
              continue;
            const float* row = src_plane + iy * W;
            for (std::size_t kx = 0; kx < kw; ++kx)
            {
              const double wv = kptr[ky * kw + kx];
              const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kx) - pl;
              const std::ptrdiff_t lo = ox_lo[kx];
              const std::ptrdiff_t hi = ox_hi[kx];
              double* a = acc.data();
              if (s == 1)
              {
                const float* r = row + off;
                for (std::ptrdiff_t ox = lo; ox < hi; ++ox)
                  a[ox] += wv * static_cast<double>(r[ox]);
              }
              else
              {
                for (std::ptrdiff_t ox = lo; ox < hi; ++ox)
                  a[ox] += wv * static_cast<double>(row[ox * s + off]);
              }
              if (pad.mode == PadMode::Reflect)
              {
                for (std::ptrdiff_t ox = 0; ox < lo; ++ox)
                  a[ox] += wv * static_cast<double>(row[map_index(ox * s + off, W, PadMode::Reflect)]);
                for (std::ptrdiff_t ox = hi; ox < Wo; ++ox)
                  a[ox] += wv * static_cast<double>(row[map_index(ox * s + off, W, PadMode::Reflect)]);
              }
            }
          }
        }
        float* dst = dst_plane + oy * os.w;
        for (std::ptrdiff_t ox = 0; ox < Wo; ++ox)
          dst[ox] = static_cast<float>(acc[static_cast<std::size_t>(ox)]);
      }
    }
  }
}

Tensor conv2d(const Tensor& in, const ConvWeights& w, std::size_t stride, const PadSpec& pad)
{
  Tensor out;
  conv2d(in, w, stride, pad, out);
  return out;
}

void relu_inplace(Tensor& t)
{
  for (float& v : t.values())
    v = std::max(v, 0.f);
}

Tensor relu(const Tensor& in)
{
  Tensor out = in;
  relu_inplace(out);
  return out;
}

Shape maxpool2_output_shape(const Shape& in)
{
  return {in.n, in.c, (in.h + 1) / 2, (in.w + 1) / 2};
}

void maxpool2(const Tensor& in, Tensor& out)
{
  if (in.h() == 0 || in.w() == 0)
    throw ShapeError("maxpool2 on empty spatial extent");
  const Shape os = maxpool2_output_shape(in.shape());
  out.reshape(os);
  const std::size_t H = in.h();
  const std::size_t W = in.w();
  for (std::size_t n = 0; n < os.n; ++n)
    for (std::size_t c = 0; c < os.c; ++c)
    {
      const float* src = in.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t oy = 0; oy < os.h; ++oy)
      {
        const float* r0 = src + (2 * oy) * W;
        const float* r1 = src + std::min(2 * oy + 1, H - 1) * W;
        for (std::size_t ox = 0; ox < os.w; ++ox)
        {
          const std::size_t x0 = 2 * ox;
          const std::size_t x1 = std::min(x0 + 1, W - 1);
          dst[oy * os.w + ox] = std::max(std::max(r0[x0], r0[x1]), std::max(r1[x0], r1[x1]));
        }
      }
    }
}

Tensor maxpool2(const Tensor& in)
{
  Tensor out;
  maxpool2(in, out);
  return out;
}

namespace detail {

std::vector<LinearTap> bilinear_taps(std::size_t in_size, std::size_t out_size)
{
  std::vector<LinearTap> taps(out_size);
  if (in_size == out_size)
  {
    for (std::size_t i = 0; i < out_size; ++i)
      taps[i] = {i, i, 0.0};
    return taps;
  }
  const double scale = static_cast<double>(in_size) / static_cast<double>(out_size);
  const double max_src = static_cast<double>(in_size - 1);
  for (std::size_t d = 0; d < out_size; ++d)
  {
    const double src = std::clamp((static_cast<double>(d) + 0.5) * scale - 0.5, 0.0, max_src);
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in_size - 1);
    taps[d] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

} // namespace detail

void resize_bilinear(const Tensor& in, std::size_t out_h, std::size_t out_w, Tensor& out)
{
  if (out_h < 1 || out_w < 1)
    throw ShapeError("resize target must be at least 1x1");
  if (in.h() == 0 || in.w() == 0)
    throw ShapeError("resize of empty spatial extent");
  out.reshape({in.n(), in.c(), out_h, out_w});
  if (in.h() == out_h && in.w() == out_w)
  {
    std::copy(in.values().begin(), in.values().end(), out.values().begin());
    return;
  }
  const auto ty = detail::bilinear_taps(in.h(), out_h);
  const auto tx = detail::bilinear_taps(in.w(), out_w);
  const std::size_t W = in.w();
  for (std::size_t n = 0; n < in.n(); ++n)
    for (std::size_t c = 0; c < in.c(); ++c)
    {
      const float* src = in.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t y = 0; y < out_h; ++y)
      {
        const float* r0 = src + ty[y].i0 * W;
        const float* r1 = src + ty[y].i1 * W;
        for (std::size_t x = 0; x < out_w; ++x)
          dst[y * out_w + x] =
            detail::bilerp(r0[tx[x].i0], r0[tx[x].i1], r1[tx[x].i0], r1[tx[x].i1], tx[x].frac, ty[y].frac);
      }
    }
}

Tensor resize_bilinear(const Tensor& in, std::size_t out_h, std::size_t out_w)
{
  Tensor out;
  resize_bilinear(in, out_h, out_w, out);
  return out;
}

void resize_nearest(const Tensor& in, std::size_t factor, Tensor& out)
{
  if (factor < 1)
    throw ConfigError("nearest upsampling factor must be positive");
  const std::size_t W = in.w();
  const std::size_t Wo = W * factor;
  out.reshape({in.n(), in.c(), in.h() * factor, Wo});
  for (std::size_t n = 0; n < in.n(); ++n)
    for (std::size_t c = 0; c < in.c(); ++c)
    {
      const float* src = in.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t y = 0; y < in.h(); ++y)
      {
        float* first = dst + (y * factor) * Wo;
        for (std::size_t x = 0; x < W; ++x)
          std::fill_n(first + x * factor, factor, src[y * W + x]);
        for (std::size_t r = 1; r < factor; ++r)
          std::copy_n(first, Wo, first + r * Wo);
      }
    }
}

Tensor resize_nearest(const Tensor& in, std::size_t factor)
{
  Tensor out;
  resize_nearest(in, factor, out);
  return out;
}

Shape pad_output_shape(const Shape& in, const PadSpec& spec)
{
  return {in.n, in.c, in.h + spec.top + spec.bottom, in.w + spec.left + spec.right};
}

void pad(const Tensor& in, const PadSpec& spec, Tensor& out)
{
  check_reflect(in.shape(), spec);
  const Shape os = pad_output_shape(in.shape(), spec);
  out.reshape(os);
  const auto H = static_cast<std::ptrdiff_t>(in.h());
  const auto W = static_cast<std::ptrdiff_t>(in.w());
  for (std::size_t n = 0; n < os.n; ++n)
    for (std::size_t c = 0; c < os.c; ++c)
    {
      const float* src = in.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t y = 0; y < os.h; ++y)
      {
        const std::ptrdiff_t iy = map_index(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(spec.top), H, spec.mode);
        float* drow = dst + y * os.w;
        if (iy < 0)
        {
          std::fill_n(drow, os.w, 0.f);
          continue;
        }
        const float* srow = src + iy * W;
        for (std::size_t x = 0; x < os.w; ++x)
        {
          const std::ptrdiff_t ix =
            map_index(static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(spec.left), W, spec.mode);
          drow[x] = ix < 0 ? 0.f : srow[ix];
        }
      }
    }
}

Tensor pad(const Tensor& in, const PadSpec& spec)
{
  Tensor out;
  pad(in, spec, out);
  return out;
}

} // namespace tinstitch
