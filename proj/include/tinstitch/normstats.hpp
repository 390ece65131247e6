#pragma once

#include "tinstitch/tensor.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <variant>
#include <vector>

namespace tinstitch {

inline constexpr double kDefaultEps = 1e-5;

// Per-(sample, channel) spatial mean and eps-stabilised population stddev.
struct ChannelStats
{
  std::size_t n = 0;
  std::size_t c = 0;
  std::vector<float> mean;   // n * c
  std::vector<float> stddev; // n * c

  float mean_at(std::size_t i, std::size_t ch) const { return mean[i * c + ch]; }
  float std_at(std::size_t i, std::size_t ch) const { return stddev[i * c + ch]; }
};

struct AffineParams
{
  std::vector<float> gamma;
  std::vector<float> beta;

  static AffineParams identity(std::size_t channels)
  {
    return {std::vector<float>(channels, 1.f), std::vector<float>(channels, 0.f)};
  }
};

struct WhiteningStats
{
  std::size_t n = 0;
  std::size_t c = 0;
  std::vector<float> mean;         // n * c
  std::vector<float> inv_sqrt_cov; // n * c * c, symmetric per sample
};

// sigma = sqrt(var + eps). eps may be 0 here; normalisation layers require eps > 0.
ChannelStats channel_stats(const Tensor& x, double eps = kDefaultEps);

Tensor instance_norm(const Tensor& x, const AffineParams& affine, double eps = kDefaultEps);

// Normalises x with externally supplied statistics. Stats with n == 1 are
// broadcast over the batch.
void thumbnail_instance_norm(const Tensor& x, const ChannelStats& stats, const AffineParams& affine, Tensor& out);
Tensor thumbnail_instance_norm(const Tensor& x, const ChannelStats& stats, const AffineParams& affine);

// Population covariance over spatial positions; inverse square root via
// Jacobi eigendecomposition with eigenvalues floored at eps.
WhiteningStats whitening_stats(const Tensor& x, double eps = kDefaultEps);

// Spatial covariance (n * c * c, double) used by the whitening path and tests.
std::vector<double> spatial_covariance(const Tensor& x, std::size_t n_index, const std::vector<double>& mean);

void thumbnail_instance_whiten(const Tensor& x, const WhiteningStats& stats, Tensor& out);
Tensor thumbnail_instance_whiten(const Tensor& x, const WhiteningStats& stats);

Tensor instance_whiten(const Tensor& x, double eps = kDefaultEps);

// y = sigma_s * (x - mu_c) / sigma_c + mu_s
void adain_transfer(const ChannelStats& content, const ChannelStats& style, const Tensor& x, Tensor& out);
Tensor adain_transfer(const ChannelStats& content, const ChannelStats& style, const Tensor& x);

// alpha * stylized + (1 - alpha) * content
Tensor blend_style(const Tensor& content, const Tensor& stylized, float alpha);
void blend_style_inplace(const Tensor& content, Tensor& stylized, float alpha);

struct AdainStats
{
  ChannelStats content;
};

using BankEntry = std::variant<ChannelStats, WhiteningStats, AdainStats>;

enum class BankMode
{
  Capture,
  Apply,
};

// Statistics captured on the thumbnail pass, keyed by the norm layer's index
// in the graph. Written during capture, then frozen and shared read-only.
class StatsBank
{
public:
  BankMode mode() const noexcept { return mode_; }
  void freeze() noexcept { mode_ = BankMode::Apply; }

  void put(int layer, BankEntry entry);
  const BankEntry& get(int layer) const;
  bool contains(int layer) const { return entries_.count(layer) != 0; }

  // Style-side statistics for adain layers; may be set in either mode before use.
  void set_style(int layer, ChannelStats stats) { styles_[layer] = std::move(stats); }
  const ChannelStats& style(int layer) const;
  bool has_style(int layer) const { return styles_.count(layer) != 0; }

  const std::map<int, BankEntry>& entries() const noexcept { return entries_; }
  const std::map<int, ChannelStats>& styles() const noexcept { return styles_; }

  std::size_t byte_size() const;

private:
  BankMode mode_ = BankMode::Capture;
  std::map<int, BankEntry> entries_;
  std::map<int, ChannelStats> styles_;
};

} // namespace tinstitch
