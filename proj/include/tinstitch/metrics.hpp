#pragma once

#include "tinstitch/network.hpp"
#include "tinstitch/rect.hpp"

#include <span>
#include <string>
#include <vector>

namespace tinstitch {

// Encoder truncated at a probe layer. Norm-free prefixes only.
class FeatureExtractor
{
public:
  // Throws ConfigError when `probe` is not a layer name in `graph`.
  FeatureExtractor(const NetworkGraph& graph, const WeightStore& weights, const std::string& probe);
  // Uses the whole graph.
  FeatureExtractor(const NetworkGraph& graph, const WeightStore& weights);

  Tensor operator()(const Tensor& x) const;
  const Network& network() const noexcept { return net_; }

private:
  Network net_;
};

// ||F(a) - F(b)||^2 / numel(F(a)).
double stroke_perceptual_loss(const Tensor& patch, const Tensor& target, const FeatureExtractor& fx);
// Same on precomputed features.
double feature_distance(const Tensor& fa, const Tensor& fb);

// Crop of the stylized thumbnail under `window` (content coordinates divided
// by `ratio` = content / thumbnail size, corners rounded to nearest), bilinearly
// resized to out_h x out_w.
Rect thumbnail_crop(const Rect& window, double ratio);
Tensor crop_and_upsample_target(const Tensor& thumb_stylized, const Rect& window, double ratio, std::size_t out_h,
                                std::size_t out_w);

inline double total_loss(double l_original, double l_sp, double lambda = 1.0)
{
  return l_original + lambda * l_sp;
}

// Gram matrix F F^T / (C H W) per batch element 0, row-major C x C.
std::vector<double> normalized_gram(const Tensor& features);

// Mean pairwise Frobenius distance between the normalized Grams of the
// probe features of each patch. Throws ConfigError for fewer than two patches.
double gram_consistency(std::span<const Tensor> patches, const FeatureExtractor& fx);

std::string metrics_json(double l_sp, double gram_consistency);

} // namespace tinstitch
