#include "tinstitch/normstats.hpp"

#include "tinstitch/error.hpp"
#include "tinstitch/linalg.hpp"

#include <cmath>

namespace tinstitch {

namespace {

void check_stats_shape(const Tensor& x, std::size_t n, std::size_t c, const char* what)
{
  if (c != x.c() || (n != x.n() && n != 1))
    throw ConfigError(std::string(what) + " statistics are " + std::to_string(n) + "x" + std::to_string(c) +
                      " but the input is " + to_string(x.shape()));
}

void check_affine(const AffineParams& affine, std::size_t c)
{
  if (affine.gamma.size() != c || affine.beta.size() != c)
    throw ConfigError("affine parameters have " + std::to_string(affine.gamma.size()) + "/" +
                      std::to_string(affine.beta.size()) + " entries for " + std::to_string(c) + " channels");
}

std::vector<double> plane_means(const Tensor& x, std::size_t n)
{
  const std::size_t hw = x.h() * x.w();
  std::vector<double> mean(x.c(), 0.0);
  for (std::size_t c = 0; c < x.c(); ++c)
  {
    const float* p = x.plane(n, c);
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i)
      s += p[i];
    mean[c] = s / static_cast<double>(hw);
  }
  return mean;
}

} // namespace

ChannelStats channel_stats(const Tensor& x, double eps)
{
  if (x.h() * x.w() == 0)
    throw ShapeError("channel statistics need a non-empty spatial extent, got " + to_string(x.shape()));
  if (eps < 0)
    throw ConfigError("eps must be non-negative");
  const std::size_t hw = x.h() * x.w();
  ChannelStats s;
  s.n = x.n();
  s.c = x.c();
  s.mean.resize(s.n * s.c);
  s.stddev.resize(s.n * s.c);
  for (std::size_t n = 0; n < x.n(); ++n)
  {
    const std::vector<double> mean = plane_means(x, n);
    for (std::size_t c = 0; c < x.c(); ++c)
    {
      const float* p = x.plane(n, c);
      double ss = 0.0;
      for (std::size_t i = 0; i < hw; ++i)
      {
        const double d = p[i] - mean[c];
        ss += d * d;
      }
      s.mean[n * s.c + c] = static_cast<float>(mean[c]);
      s.stddev[n * s.c + c] = static_cast<float>(std::sqrt(ss / static_cast<double>(hw) + eps));
    }
  }
  return s;
}

void thumbnail_instance_norm(const Tensor& x, const ChannelStats& stats, const AffineParams& affine, Tensor& out)
{
  check_stats_shape(x, stats.n, stats.c, "normalisation");
  check_affine(affine, x.c());
  if (&out != &x)
    out.reshape(x.shape());
  const std::size_t hw = x.h() * x.w();
  for (std::size_t n = 0; n < x.n(); ++n)
  {
    const std::size_t sn = stats.n == 1 ? 0 : n;
    for (std::size_t c = 0; c < x.c(); ++c)
    {
      const double mu = stats.mean_at(sn, c);
      const double sigma = stats.std_at(sn, c);
      const double gamma = affine.gamma[c];
      const double beta = affine.beta[c];
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i)
        dst[i] = static_cast<float>(gamma * ((src[i] - mu) / sigma) + beta);
    }
  }
}

Tensor thumbnail_instance_norm(const Tensor& x, const ChannelStats& stats, const AffineParams& affine)
{
  Tensor out;
  thumbnail_instance_norm(x, stats, affine, out);
  return out;
}

Tensor instance_norm(const Tensor& x, const AffineParams& affine, double eps)
{
  if (eps <= 0)
    throw ConfigError("instance norm needs eps > 0");
  return thumbnail_instance_norm(x, channel_stats(x, eps), affine);
}

std::vector<double> spatial_covariance(const Tensor& x, std::size_t n_index, const std::vector<double>& mean)
{
  const std::size_t C = x.c();
  const std::size_t hw = x.h() * x.w();
  std::vector<double> cov(C * C, 0.0);
  std::vector<double> centred(C);
  for (std::size_t k = 0; k < hw; ++k)
  {
    for (std::size_t c = 0; c < C; ++c)
      centred[c] = x.plane(n_index, c)[k] - mean[c];
    for (std::size_t i = 0; i < C; ++i)
      for (std::size_t j = i; j < C; ++j)
        cov[i * C + j] += centred[i] * centred[j];
  }
  for (std::size_t i = 0; i < C; ++i)
    for (std::size_t j = i; j < C; ++j)
    {
      cov[i * C + j] /= static_cast<double>(hw);
      cov[j * C + i] = cov[i * C + j];
    }
  return cov;
}

WhiteningStats whitening_stats(const Tensor& x, double eps)
{
  if (x.h() * x.w() < 2)
    throw ShapeError("whitening needs at least two spatial positions, got " + to_string(x.shape()));
  if (eps <= 0)
    throw ConfigError("whitening needs eps > 0");
  const std::size_t C = x.c();
  WhiteningStats s;
  s.n = x.n();
  s.c = C;
  s.mean.resize(s.n * C);
  s.inv_sqrt_cov.resize(s.n * C * C);
  for (std::size_t n = 0; n < x.n(); ++n)
  {
    const std::vector<double> mean = plane_means(x, n);
    const std::vector<double> cov = spatial_covariance(x, n, mean);
    const std::vector<double> inv = linalg::inverse_sqrt_psd(cov, C, eps);
    for (std::size_t c = 0; c < C; ++c)
      s.mean[n * C + c] = static_cast<float>(mean[c]);
    for (std::size_t i = 0; i < C * C; ++i)
      s.inv_sqrt_cov[n * C * C + i] = static_cast<float>(inv[i]);
  }
  return s;
}

void thumbnail_instance_whiten(const Tensor& x, const WhiteningStats& stats, Tensor& out)
{
  check_stats_shape(x, stats.n, stats.c, "whitening");
  if (&out == &x)
    throw ConfigError("whitening cannot run in place");
  out.reshape(x.shape());
  const std::size_t C = x.c();
  const std::size_t hw = x.h() * x.w();
  std::vector<double> centred(C);
  for (std::size_t n = 0; n < x.n(); ++n)
  {
    const std::size_t sn = stats.n == 1 ? 0 : n;
    const float* m = stats.inv_sqrt_cov.data() + sn * C * C;
    const float* mu = stats.mean.data() + sn * C;
    for (std::size_t i = 0; i < hw; ++i)
    {
      for (std::size_t c = 0; c < C; ++c)
        centred[c] = static_cast<double>(x.plane(n, c)[i]) - mu[c];
      for (std::size_t r = 0; r < C; ++r)
      {
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          acc += static_cast<double>(m[r * C + c]) * centred[c];
        out.plane(n, r)[i] = static_cast<float>(acc);
      }
    }
  }
}

Tensor thumbnail_instance_whiten(const Tensor& x, const WhiteningStats& stats)
{
  Tensor out;
  thumbnail_instance_whiten(x, stats, out);
  return out;
}

Tensor instance_whiten(const Tensor& x, double eps)
{
  return thumbnail_instance_whiten(x, whitening_stats(x, eps));
}

void adain_transfer(const ChannelStats& content, const ChannelStats& style, const Tensor& x, Tensor& out)
{
  check_stats_shape(x, content.n, content.c, "content");
  check_stats_shape(x, style.n, style.c, "style");
  if (&out != &x)
    out.reshape(x.shape());
  const std::size_t hw = x.h() * x.w();
  for (std::size_t n = 0; n < x.n(); ++n)
  {
    const std::size_t cn = content.n == 1 ? 0 : n;
    const std::size_t sn = style.n == 1 ? 0 : n;
    for (std::size_t c = 0; c < x.c(); ++c)
    {
      const double mc = content.mean_at(cn, c);
      const double sc = content.std_at(cn, c);
      const double ms = style.mean_at(sn, c);
      const double ss = style.std_at(sn, c);
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i)
        dst[i] = static_cast<float>(ss * ((src[i] - mc) / sc) + ms);
    }
  }
}

Tensor adain_transfer(const ChannelStats& content, const ChannelStats& style, const Tensor& x)
{
  Tensor out;
  adain_transfer(content, style, x, out);
  return out;
}

void blend_style_inplace(const Tensor& content, Tensor& stylized, float alpha)
{
  if (content.shape() != stylized.shape())
    throw ShapeError("blend_style needs equal dims, got " + to_string(content.shape()) + " and " +
                     to_string(stylized.shape()));
  if (!(alpha >= 0.f && alpha <= 1.f))
    throw ConfigError("style weight must lie in [0, 1]");
  if (alpha == 1.f)
    return;
  const double a = alpha;
  auto src = content.values();
  auto dst = stylized.values();
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] = static_cast<float>(a * dst[i] + (1.0 - a) * src[i]);
}

Tensor blend_style(const Tensor& content, const Tensor& stylized, float alpha)
{
  Tensor out = stylized;
  blend_style_inplace(content, out, alpha);
  return out;
}

void StatsBank::put(int layer, BankEntry entry)
{
  if (mode_ != BankMode::Capture)
    throw StateError("statistics bank is frozen; cannot record layer " + std::to_string(layer));
  entries_[layer] = std::move(entry);
}

const BankEntry& StatsBank::get(int layer) const
{
  auto it = entries_.find(layer);
  if (it == entries_.end())
    throw StateError("no captured statistics for norm layer " + std::to_string(layer) +
                     "; run the thumbnail capture pass first");
  return it->second;
}

const ChannelStats& StatsBank::style(int layer) const
{
  auto it = styles_.find(layer);
  if (it == styles_.end())
    throw StateError("no style statistics for adain layer " + std::to_string(layer));
  return it->second;
}

std::size_t StatsBank::byte_size() const
{
  std::size_t floats = 0;
  auto channel = [](const ChannelStats& s) { return s.mean.size() + s.stddev.size(); };
  for (const auto& [id, e] : entries_)
  {
    if (const auto* cs = std::get_if<ChannelStats>(&e))
      floats += channel(*cs);
    else if (const auto* ws = std::get_if<WhiteningStats>(&e))
      floats += ws->mean.size() + ws->inv_sqrt_cov.size();
    else
      floats += channel(std::get<AdainStats>(e).content);
  }
  for (const auto& [id, s] : styles_)
    floats += channel(s);
  return floats * sizeof(float);
}

} // namespace tinstitch
