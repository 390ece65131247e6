#include "fixtures.hpp"

#include <filesystem>
#include <random>

namespace fixture {

using tinstitch::LayerSpec;

tinstitch::NetworkGraph random_graph(std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  tinstitch::NetworkGraph g;
  g.name = "random_" + std::to_string(seed);
  std::size_t channels = 3;
  int open_pools = 0;
  int pools_left = pick(0, 2);
  const int steps = pick(2, 6);
  int conv_id = 0;
  for (int s = 0; s < steps || open_pools > 0; ++s)
  {
    const int kind = pick(0, 5);
    if (kind <= 2)
    {
      const std::size_t k = static_cast<std::size_t>(2 * pick(0, 2) + 1);
      const std::size_t out = static_cast<std::size_t>(pick(2, 5));
      const std::string w = "c" + std::to_string(conv_id++);
      if (kind == 2 && k > 1)
      {
        g.layers.push_back(LayerSpec::pad_reflect((k - 1) / 2));
        g.layers.push_back(LayerSpec::conv(channels, out, k, w));
      }
      else
      {
        g.layers.push_back(LayerSpec::conv(channels, out, k, w, (k - 1) / 2));
      }
      channels = out;
    }
    else if (kind == 3)
    {
      g.layers.push_back(LayerSpec::relu());
    }
    else if (kind == 4 && pools_left > 0)
    {
      g.layers.push_back(LayerSpec::maxpool2());
      --pools_left;
      ++open_pools;
    }
    else if (open_pools > 0 && (kind == 5 || s >= steps))
    {
      g.layers.push_back(LayerSpec::upsample(2));
      --open_pools;
    }
  }
  if (g.layers.empty() || g.layers.front().kind != tinstitch::LayerKind::Conv)
    g.layers.insert(g.layers.begin(), LayerSpec::conv(3, 3, 3, "c_first", 1));
  g.validate();
  return g;
}

std::string scratch_dir(const std::string& tag)
{
  static std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("tinstitch_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(dir);
  return dir.string();
}

} // namespace fixture
