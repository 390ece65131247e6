#include "tinstitch/metrics.hpp"

#include "tinstitch/error.hpp"
#include "tinstitch/ops.hpp"
#include "tinstitch/tiler.hpp"

#include <json.hpp>

#include <cmath>

namespace tinstitch {

namespace {

NetworkGraph checked_prefix(const NetworkGraph& graph, const std::string& probe)
{
  if (!graph.find_layer(probe))
    throw ConfigError("probe layer '" + probe + "' not found in graph '" + graph.name + "'");
  return graph.truncated_at(probe);
}

} // namespace

FeatureExtractor::FeatureExtractor(const NetworkGraph& graph, const WeightStore& weights, const std::string& probe)
  : net_(Network::bind(checked_prefix(graph, probe), weights))
{
}

FeatureExtractor::FeatureExtractor(const NetworkGraph& graph, const WeightStore& weights)
  : net_(Network::bind(graph, weights))
{
}

Tensor FeatureExtractor::operator()(const Tensor& x) const
{
  StatsBank bank;
  return net_.forward(x, bank);
}

double feature_distance(const Tensor& fa, const Tensor& fb)
{
  if (fa.shape() != fb.shape())
    throw ShapeError("feature shapes differ: " + to_string(fa.shape()) + " vs " + to_string(fb.shape()));
  if (fa.numel() == 0)
    throw ShapeError("empty features");
  double sum = 0.0;
  const float* a = fa.data();
  const float* b = fb.data();
  for (std::size_t i = 0; i < fa.numel(); ++i)
  {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(fa.numel());
}

double stroke_perceptual_loss(const Tensor& patch, const Tensor& target, const FeatureExtractor& fx)
{
  if (patch.shape() != target.shape())
    throw ShapeError("stylized patch " + to_string(patch.shape()) + " and target " + to_string(target.shape()) +
                     " differ");
  return feature_distance(fx(patch), fx(target));
}

Rect thumbnail_crop(const Rect& window, double ratio)
{
  if (!(ratio > 0.0))
    throw ConfigError("thumbnail scale ratio must be positive");
  auto map = [&](std::size_t v) { return static_cast<std::size_t>(std::llround(static_cast<double>(v) / ratio)); };
  const std::size_t x0 = map(window.x), y0 = map(window.y);
  const std::size_t x1 = map(window.right()), y1 = map(window.bottom());
  if (x1 <= x0 || y1 <= y0)
    throw ShapeError("window " + to_string(window) + " maps to an empty thumbnail crop");
  return {x0, y0, x1 - x0, y1 - y0};
}

Tensor crop_and_upsample_target(const Tensor& thumb_stylized, const Rect& window, double ratio, std::size_t out_h,
                                std::size_t out_w)
{
  const Rect crop = thumbnail_crop(window, ratio);
  const Tensor patch = extract_patch(thumb_stylized, crop);
  if (patch.h() == out_h && patch.w() == out_w)
    return patch;
  return resize_bilinear(patch, out_h, out_w);
}

std::vector<double> normalized_gram(const Tensor& f)
{
  const std::size_t C = f.c();
  const std::size_t HW = f.h() * f.w();
  if (C == 0 || HW == 0)
    throw ShapeError("gram of empty features");
  std::vector<double> g(C * C, 0.0);
  for (std::size_t i = 0; i < C; ++i)
    for (std::size_t j = i; j < C; ++j)
    {
      const float* a = f.plane(0, i);
      const float* b = f.plane(0, j);
      double s = 0.0;
      for (std::size_t k = 0; k < HW; ++k)
        s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
      g[i * C + j] = g[j * C + i] = s / static_cast<double>(C * HW);
    }
  return g;
}

double gram_consistency(std::span<const Tensor> patches, const FeatureExtractor& fx)
{
  if (patches.size() < 2)
    throw ConfigError("gram consistency needs at least two patches");
  std::vector<std::vector<double>> grams;
  for (const Tensor& p : patches)
    grams.push_back(normalized_gram(fx(p)));
  for (const auto& g : grams)
    if (g.size() != grams.front().size())
      throw ShapeError("patch features have different channel counts");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < grams.size(); ++a)
    for (std::size_t b = a + 1; b < grams.size(); ++b)
    {
      double d = 0.0;
      for (std::size_t k = 0; k < grams[a].size(); ++k)
      {
        const double e = grams[a][k] - grams[b][k];
        d += e * e;
      }
      sum += std::sqrt(d);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

std::string metrics_json(double l_sp, double gram_consistency)
{
  nlohmann::json j;
  j["l_sp"] = l_sp;
  j["gram_consistency"] = gram_consistency;
  return j.dump();
}

} // namespace tinstitch
