#pragma once

#include "tinstitch/rect.hpp"
#include "tinstitch/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace tinstitch {

// Sliding-window decomposition of a W x H image into K x K windows at stride S.
// Patch i reads windows[i] and contributes ownership[i] to the output; the
// ownership rectangles partition the image.
struct TilePlan
{
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t K = 0;
  std::size_t S = 0;
  std::vector<std::size_t> xs; // window origins along x
  std::vector<std::size_t> ys; // window origins along y
  std::vector<Rect> windows;   // row-major over (ys, xs)
  std::vector<Rect> ownership;

  std::size_t size() const noexcept { return windows.size(); }
  std::size_t cols() const noexcept { return xs.size(); }
  std::size_t rows() const noexcept { return ys.size(); }
};

// Throws ConfigError unless K > S >= 1, ShapeError for an empty image.
TilePlan plan_tiles(std::size_t width, std::size_t height, std::size_t K, std::size_t S);

// Window origins along one axis and the ownership cut points between them
// (cuts[i] is the first pixel owned by window i + 1).
std::vector<std::size_t> window_origins(std::size_t extent, std::size_t K, std::size_t S);
std::vector<std::size_t> ownership_cuts(const std::vector<std::size_t>& origins, std::size_t window);

Tensor extract_patch(const Tensor& image, const Rect& window);
void extract_patch(const Tensor& image, const Rect& window, Tensor& out);

// Copies the ownership region of patch `index` (a tensor covering
// plan.windows[index]) into `out`, which must cover the whole image.
void place_patch(const Tensor& patch, const TilePlan& plan, std::size_t index, Tensor& out,
                 std::size_t patch_batch = 0, std::size_t out_batch = 0);

Tensor assemble(std::span<const Tensor> patches, const TilePlan& plan);

std::string plan_to_json(const TilePlan& plan);

} // namespace tinstitch
