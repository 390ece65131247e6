#include "tinstitch/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace tinstitch {

namespace {

// Removes the components of a 3x3 kernel along 1, x and y so it ignores
// constant and linear input.
void make_second_order(float* k)
{
  double mean = 0.0, gx = 0.0, gy = 0.0;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x)
    {
      mean += k[y * 3 + x];
      gx += k[y * 3 + x] * (x - 1);
      gy += k[y * 3 + x] * (y - 1);
    }
  mean /= 9.0;
  gx /= 6.0;
  gy /= 6.0;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x)
      k[y * 3 + x] = static_cast<float>(k[y * 3 + x] - mean - gx * (x - 1) - gy * (y - 1));
}

float smooth(float t)
{
  return t * t * (3.f - 2.f * t);
}

// One octave of value noise on a lattice with the given cell size.
class ValueNoise
{
public:
  ValueNoise(std::size_t width, std::size_t height, double cell, std::mt19937_64& rng)
    : cell_(cell),
      gw_(static_cast<std::size_t>(std::ceil(static_cast<double>(width) / cell)) + 2),
      gh_(static_cast<std::size_t>(std::ceil(static_cast<double>(height) / cell)) + 2),
      grid_(gw_ * gh_)
  {
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    for (float& v : grid_)
      v = u(rng);
  }

  float operator()(std::size_t x, std::size_t y) const
  {
    const double fx = static_cast<double>(x) / cell_;
    const double fy = static_cast<double>(y) / cell_;
    const auto ix = static_cast<std::size_t>(fx);
    const auto iy = static_cast<std::size_t>(fy);
    const float tx = smooth(static_cast<float>(fx - static_cast<double>(ix)));
    const float ty = smooth(static_cast<float>(fy - static_cast<double>(iy)));
    const float a = grid_[iy * gw_ + ix];
    const float b = grid_[iy * gw_ + ix + 1];
    const float c = grid_[(iy + 1) * gw_ + ix];
    const float d = grid_[(iy + 1) * gw_ + ix + 1];
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
  }

private:
  double cell_;
  std::size_t gw_;
  std::size_t gh_;
  std::vector<float> grid_;
};

} // namespace

WeightStore synthetic_weights(const NetworkGraph& graph, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  WeightStore store;
  for (const LayerSpec& l : graph.layers)
  {
    if (l.kind == LayerKind::Conv)
    {
      const std::size_t fan_in = l.in_channels * l.kernel * l.kernel;
      std::normal_distribution<float> he(0.f, static_cast<float>(std::sqrt(2.0 / static_cast<double>(fan_in))));
      std::normal_distribution<float> small(0.f, 0.01f);
      StoredTensor w{{static_cast<std::uint32_t>(l.out_channels), static_cast<std::uint32_t>(l.in_channels),
                      static_cast<std::uint32_t>(l.kernel), static_cast<std::uint32_t>(l.kernel)},
                     {}};
      w.values.resize(w.numel());
      for (float& v : w.values)
        v = he(rng);
      StoredTensor b{{static_cast<std::uint32_t>(l.out_channels)}, std::vector<float>(l.out_channels)};
      for (float& v : b.values)
        v = small(rng);
      store.add(l.weight + ".weight", std::move(w));
      store.add(l.weight + ".bias", std::move(b));
    }
    else if (l.kind == LayerKind::Norm && l.affine)
    {
      std::uniform_real_distribution<float> g(0.5f, 1.5f);
      std::normal_distribution<float> be(0.f, 0.1f);
      StoredTensor gamma{{static_cast<std::uint32_t>(l.channels)}, std::vector<float>(l.channels)};
      StoredTensor beta{{static_cast<std::uint32_t>(l.channels)}, std::vector<float>(l.channels)};
      for (float& v : gamma.values)
        v = g(rng);
      for (float& v : beta.values)
        v = be(rng);
      store.add(l.weight + ".gamma", std::move(gamma));
      store.add(l.weight + ".beta", std::move(beta));
    }
  }
  return store;
}

Model make_toy_network(std::uint64_t seed, NormVariant variant)
{
  NetworkGraph g;
  g.name = "toy_tin";
  g.layers = {
    LayerSpec::pad_reflect(1),
    LayerSpec::conv(3, 8, 3, "toy.conv0"),
    LayerSpec::pad_reflect(1),
    LayerSpec::conv(8, 8, 3, "toy.conv1"),
    LayerSpec::norm(variant, 8, variant == NormVariant::Tin || variant == NormVariant::In, "toy.norm"),
    LayerSpec::pad_reflect(1),
    LayerSpec::conv(8, 8, 3, "toy.conv2"),
    LayerSpec::pad_reflect(1),
    LayerSpec::conv(8, 3, 3, "toy.conv3"),
  };
  g.validate();
  WeightStore w = synthetic_weights(g, seed);
  // Centre the output around mid-grey so PNG round trips keep most of the signal.
  WeightStore shifted;
  for (const auto& name : w.names())
  {
    StoredTensor t = w.get(name);
    if (name == "toy.conv3.weight")
      for (float& v : t.values)
        v *= 0.25f;
    if (name == "toy.conv3.bias")
      for (float& v : t.values)
        v += 0.5f;
    shifted.add(name, std::move(t));
  }
  return {std::move(g), std::move(shifted)};
}

namespace {

NetworkGraph reference_encoder_graph(std::size_t width)
{
  const std::size_t c1 = width, c2 = 2 * width, c3 = 4 * width, c4 = 8 * width;
  NetworkGraph g;
  g.name = "reference_adain";
  auto block = [&](std::size_t in, std::size_t out, const std::string& weight, const std::string& relu_name) {
    g.layers.push_back(LayerSpec::pad_reflect(1));
    g.layers.push_back(LayerSpec::conv(in, out, 3, weight));
    g.layers.push_back(LayerSpec::relu(relu_name));
  };
  g.layers.push_back(LayerSpec::conv(3, 3, 1, "enc.conv0"));
  block(3, c1, "enc.conv1_1", "relu1_1");
  block(c1, c1, "enc.conv1_2", "relu1_2");
  g.layers.push_back(LayerSpec::maxpool2());
  block(c1, c2, "enc.conv2_1", "relu2_1");
  block(c2, c2, "enc.conv2_2", "relu2_2");
  g.layers.push_back(LayerSpec::maxpool2());
  block(c2, c3, "enc.conv3_1", "relu3_1");
  block(c3, c3, "enc.conv3_2", "relu3_2");
  block(c3, c3, "enc.conv3_3", "relu3_3");
  block(c3, c3, "enc.conv3_4", "relu3_4");
  g.layers.push_back(LayerSpec::maxpool2());
  block(c3, c4, "enc.conv4_1", "relu4_1");
  return g;
}

} // namespace

Model make_reference_encoder(std::uint64_t seed, std::size_t width)
{
  NetworkGraph g = reference_encoder_graph(width);
  g.name = "reference_encoder";
  g.validate();
  WeightStore w = synthetic_weights(g, seed);
  return {std::move(g), std::move(w)};
}

Model make_reference_adain(std::uint64_t seed, std::size_t width)
{
  const std::size_t c1 = width, c2 = 2 * width, c3 = 4 * width, c4 = 8 * width;
  NetworkGraph g = reference_encoder_graph(width);
  g.layers.push_back(LayerSpec::norm(NormVariant::Adain, c4));
  auto block = [&](std::size_t in, std::size_t out, const std::string& weight, bool with_relu = true) {
    g.layers.push_back(LayerSpec::pad_reflect(1));
    g.layers.push_back(LayerSpec::conv(in, out, 3, weight));
    if (with_relu)
      g.layers.push_back(LayerSpec::relu());
  };
  block(c4, c3, "dec.conv4_1");
  g.layers.push_back(LayerSpec::upsample(2));
  block(c3, c3, "dec.conv3_4");
  block(c3, c3, "dec.conv3_3");
  block(c3, c3, "dec.conv3_2");
  block(c3, c2, "dec.conv3_1");
  g.layers.push_back(LayerSpec::upsample(2));
  block(c2, c2, "dec.conv2_2");
  block(c2, c1, "dec.conv2_1");
  g.layers.push_back(LayerSpec::upsample(2));
  block(c1, c1, "dec.conv1_2");
  block(c1, 3, "dec.conv1_1", false);
  g.validate();

  // Encoder weights are shared with make_reference_encoder for the same seed.
  WeightStore enc = synthetic_weights(reference_encoder_graph(width), seed);
  WeightStore all = synthetic_weights(g, seed ^ 0x9e3779b97f4a7c15ULL);
  WeightStore merged;
  for (const auto& name : all.names())
  {
    if (const StoredTensor* e = enc.find(name))
      merged.add(name, *e);
    else
      merged.add(name, all.get(name));
  }
  return {std::move(g), std::move(merged)};
}

Model make_texture_probe(std::uint64_t seed, std::size_t channels)
{
  NetworkGraph g;
  g.name = "texture_probe";
  g.layers = {
    LayerSpec::conv(3, channels, 3, "probe.conv0"),
    LayerSpec::relu("probe_relu"),
    LayerSpec::conv(channels, channels, 3, "probe.conv1"),
  };
  g.layers.back().name = "probe";
  g.validate();
  WeightStore raw = synthetic_weights(g, seed);
  WeightStore w;
  for (const auto& name : raw.names())
  {
    StoredTensor t = raw.get(name);
    if (t.dims.size() == 4)
      for (std::size_t k = 0; k < t.values.size(); k += 9)
        make_second_order(t.values.data() + k);
    else
      std::fill(t.values.begin(), t.values.end(), 0.f);
    w.add(name, std::move(t));
  }
  return {std::move(g), std::move(w)};
}

Image make_natural_image(std::size_t width, std::size_t height, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  constexpr int kFields = 3;
  std::vector<std::vector<ValueNoise>> octaves(kFields);
  std::vector<float> amplitude;
  const double largest = static_cast<double>(std::max(width, height)) / 2.0;
  for (double cell = largest; cell >= 2.0; cell /= 2.0)
    amplitude.push_back(static_cast<float>(std::pow(cell / largest, 0.6)));
  for (int f = 0; f < kFields; ++f)
  {
    double cell = largest;
    for (std::size_t o = 0; o < amplitude.size(); ++o, cell /= 2.0)
      octaves[f].emplace_back(width, height, cell, rng);
  }
  std::uniform_real_distribution<float> mix(-0.6f, 0.6f);
  float colour[3][kFields];
  for (auto& row : colour)
    for (float& v : row)
      v = mix(rng);
  for (int c = 0; c < 3; ++c)
    colour[c][0] = 1.f;

  float norm = 0.f;
  for (float a : amplitude)
    norm += a;

  Image img(width, height);
  std::vector<float> field(kFields);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
    {
      for (int f = 0; f < kFields; ++f)
      {
        float s = 0.f;
        for (std::size_t o = 0; o < amplitude.size(); ++o)
          s += amplitude[o] * octaves[f][o](x, y);
        field[f] = s / norm;
      }
      for (int c = 0; c < 3; ++c)
      {
        float v = 0.5f;
        for (int f = 0; f < kFields; ++f)
          v += 0.45f * colour[c][f] * field[f];
        img.at(x, y, c) = unit_to_byte(v);
      }
    }
  return img;
}

Image make_lit_texture_image(std::size_t width, std::size_t height, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> period(300.0, 500.0);
  std::normal_distribution<float> noise(0.f, 1.f);

  const double px = period(rng), py = period(rng), phx = phase(rng), phy = phase(rng);
  std::vector<float> raw(width * height);
  for (float& v : raw)
    v = noise(rng);
  // Light 3x3 box blur gives the texture a little spatial structure.
  std::vector<float> tex(width * height, 0.f);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
    {
      float s = 0.f;
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
        {
          const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
          const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
          if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(height) || xx >= static_cast<std::ptrdiff_t>(width))
            continue;
          s += raw[static_cast<std::size_t>(yy) * width + static_cast<std::size_t>(xx)];
          ++n;
        }
      tex[y * width + x] = s / static_cast<float>(n);
    }

  const float tint[3] = {1.f, 0.85f, 0.7f};
  Image img(width, height);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
    {
      const double wave = std::sin(2.0 * std::numbers::pi * static_cast<double>(x) / px + phx) *
                          std::cos(2.0 * std::numbers::pi * static_cast<double>(y) / py + phy);
      const double light = 0.5 + 0.3 * std::tanh(4.0 * wave);
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = unit_to_byte(static_cast<float>(light) * tint[c] + 0.12f * tex[y * width + x]);
    }
  return img;
}

Image make_constant_image(std::size_t width, std::size_t height, std::uint8_t value)
{
  Image img(width, height);
  std::fill(img.rgb.begin(), img.rgb.end(), value);
  return img;
}

} // namespace tinstitch
