#include "tinstitch/tiler.hpp"

#include "tinstitch/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>

namespace tinstitch {

std::vector<std::size_t> window_origins(std::size_t extent, std::size_t K, std::size_t S)
{
  if (extent <= K)
    return {0};
  std::vector<std::size_t> origins;
  std::size_t pos = 0;
  for (; pos + K < extent; pos += S)
    origins.push_back(pos);
  origins.push_back(extent - K);
  return origins;
}

std::vector<std::size_t> ownership_cuts(const std::vector<std::size_t>& origins, std::size_t window)
{
  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i + 1 < origins.size(); ++i)
  {
    const std::size_t overlap = origins[i] + window - origins[i + 1];
    cuts.push_back(origins[i + 1] + overlap / 2);
  }
  return cuts;
}

TilePlan plan_tiles(std::size_t width, std::size_t height, std::size_t K, std::size_t S)
{
  if (S < 1 || K <= S)
    throw ConfigError("tile plan needs K > S >= 1 (got K=" + std::to_string(K) + ", S=" + std::to_string(S) + ")");
  if (width == 0 || height == 0)
    throw ShapeError("tile plan for an empty image");

  TilePlan plan;
  plan.width = width;
  plan.height = height;
  plan.K = K;
  plan.S = S;
  plan.xs = window_origins(width, K, S);
  plan.ys = window_origins(height, K, S);
  const std::size_t ww = std::min(K, width);
  const std::size_t wh = std::min(K, height);

  auto bounds = [](const std::vector<std::size_t>& origins, std::size_t window, std::size_t extent) {
    std::vector<std::size_t> b{0};
    for (std::size_t c : ownership_cuts(origins, window))
      b.push_back(c);
    b.push_back(extent);
    return b;
  };
  const auto bx = bounds(plan.xs, ww, width);
  const auto by = bounds(plan.ys, wh, height);

  for (std::size_t r = 0; r < plan.ys.size(); ++r)
    for (std::size_t c = 0; c < plan.xs.size(); ++c)
    {
      plan.windows.push_back({plan.xs[c], plan.ys[r], ww, wh});
      plan.ownership.push_back({bx[c], by[r], bx[c + 1] - bx[c], by[r + 1] - by[r]});
    }
  return plan;
}

void extract_patch(const Tensor& image, const Rect& window, Tensor& out)
{
  const Shape& s = image.shape();
  if (window.w == 0 || window.h == 0 || window.right() > s.w || window.bottom() > s.h)
    throw ShapeError("window " + to_string(window) + " outside image " + to_string(s));
  out.reshape({s.n, s.c, window.h, window.w});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
    {
      const float* src = image.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t y = 0; y < window.h; ++y)
        std::memcpy(dst + y * window.w, src + (window.y + y) * s.w + window.x, window.w * sizeof(float));
    }
}

Tensor extract_patch(const Tensor& image, const Rect& window)
{
  Tensor out;
  extract_patch(image, window, out);
  return out;
}

void place_patch(const Tensor& patch, const TilePlan& plan, std::size_t index, Tensor& out,
                 std::size_t patch_batch, std::size_t out_batch)
{
  if (index >= plan.size())
    throw ShapeError("patch index " + std::to_string(index) + " out of range");
  const Rect& win = plan.windows[index];
  const Rect& own = plan.ownership[index];
  const Shape& ps = patch.shape();
  const Shape& os = out.shape();
  if (ps.h != win.h || ps.w != win.w || patch_batch >= ps.n)
    throw ShapeError("patch " + to_string(ps) + " does not match window " + to_string(win));
  if (os.h != plan.height || os.w != plan.width || os.c != ps.c || out_batch >= os.n)
    throw ShapeError("output " + to_string(os) + " does not match plan");
  const std::size_t ox = own.x - win.x;
  const std::size_t oy = own.y - win.y;
  for (std::size_t c = 0; c < ps.c; ++c)
  {
    const float* src = patch.plane(patch_batch, c);
    float* dst = out.plane(out_batch, c);
    for (std::size_t y = 0; y < own.h; ++y)
      std::memcpy(dst + (own.y + y) * os.w + own.x, src + (oy + y) * ps.w + ox, own.w * sizeof(float));
  }
}

Tensor assemble(std::span<const Tensor> patches, const TilePlan& plan)
{
  if (patches.size() != plan.size())
    throw ShapeError("assemble got " + std::to_string(patches.size()) + " patches for a plan of " +
                     std::to_string(plan.size()));
  if (patches.empty())
    throw ShapeError("assemble with no patches");
  const Shape& first = patches.front().shape();
  Tensor out({first.n, first.c, plan.height, plan.width});
  for (std::size_t i = 0; i < patches.size(); ++i)
  {
    if (patches[i].n() != first.n)
      throw ShapeError("patch batch sizes differ");
    for (std::size_t n = 0; n < first.n; ++n)
      place_patch(patches[i], plan, i, out, n, n);
  }
  return out;
}

std::string plan_to_json(const TilePlan& plan)
{
  auto rects = [](const std::vector<Rect>& rs) {
    nlohmann::json a = nlohmann::json::array();
    for (const Rect& r : rs)
      a.push_back({r.x, r.y, r.w, r.h});
    return a;
  };
  nlohmann::json j;
  j["width"] = plan.width;
  j["height"] = plan.height;
  j["K"] = plan.K;
  j["S"] = plan.S;
  j["windows"] = rects(plan.windows);
  j["ownership"] = rects(plan.ownership);
  return j.dump(2);
}

} // namespace tinstitch
