#pragma once

#include "tinstitch/image.hpp"
#include "tinstitch/network.hpp"
#include "tinstitch/tiler.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tinstitch {

struct PipelineConfig
{
  std::size_t thumb_short_side = 1024;
  std::size_t K = 1064;
  std::size_t S = 1000;
  std::size_t batch_size = 1;
  float alpha = 1.f;
  std::size_t workers = 1;
  std::size_t style_size = 1024; // style image is resized to style_size x style_size
  bool allow_plain_norm = false;
  bool retain_thumbnail = false;

  // Throws ConfigError.
  void validate() const;
};

// Bytes of tensor storage per stage. The output pixels are reported apart:
// they are 8-bit, streamed band by band, and the only term that grows with
// the content resolution.
struct MemoryReport
{
  std::size_t thumbnail_bytes = 0; // thumbnail input + two live activations
  std::size_t patch_bytes = 0;     // one pass over batch_size patches
  std::size_t weight_bytes = 0;
  std::size_t bank_bytes = 0;
  std::size_t total_bytes = 0;     // max(thumbnail, workers * patch) + weights + bank
  std::size_t output_band_bytes = 0;
  std::size_t output_full_bytes = 0;
};

MemoryReport estimate_memory(const NetworkGraph& graph, const PipelineConfig& cfg, std::size_t width,
                             std::size_t height);
std::string memory_report_json(const MemoryReport& r);

// Thumbnail dims: aspect preserving, shorter side exactly `short_side`.
std::pair<std::size_t, std::size_t> thumbnail_dims(std::size_t width, std::size_t height, std::size_t short_side);

struct StylizeResult
{
  TilePlan plan;
  MemoryReport estimate;
  std::size_t measured_peak_bytes = 0; // tracked transient peak during the run
  double thumbnail_seconds = 0.0;
  double patch_seconds = 0.0;
  std::optional<Tensor> stylized_thumbnail; // kept when cfg.retain_thumbnail
  StatsBank bank;
};

// Runs the thumbnail capture pass: style statistics first (adain graphs),
// then the thumbnail forward in capture mode. Returns the frozen bank and the
// stylized thumbnail.
struct CaptureResult
{
  StatsBank bank;
  Tensor stylized;
};
CaptureResult capture_statistics(const Network& net, const Tensor& thumbnail, const Tensor* style,
                                 const ExecOptions& opts = {});

// Full pipeline. `style` is required when the graph has adain layers.
StylizeResult stylize(const Image& content, const Image* style, const Network& net, const PipelineConfig& cfg,
                      RowSink& sink);
Image stylize(const Image& content, const Image* style, const Network& net, const PipelineConfig& cfg,
              StylizeResult* result = nullptr);
StylizeResult stylize_file(const std::filesystem::path& content, const std::optional<std::filesystem::path>& style,
                           const Network& net, const PipelineConfig& cfg, const std::filesystem::path& out);

// Float path: applies `net` patch by patch with a frozen bank and assembles.
Tensor run_tiled(const Network& net, const StatsBank& bank, const Tensor& content, std::size_t K, std::size_t S,
                 const ExecOptions& opts = {});
// Per-patch outputs cropped to their ownership regions, in plan order.
std::vector<Tensor> run_patches(const Network& net, const StatsBank& bank, const Tensor& content,
                                const TilePlan& plan, const ExecOptions& opts = {});

struct SweepRow
{
  std::size_t scale = 0; // effective shorter side
  std::string layer;
  double mean_abs_mu = 0.0;
  double mean_sigma = 0.0;
  std::vector<double> mu;    // per channel
  std::vector<double> sigma; // per channel
};

struct SweepResult
{
  std::vector<SweepRow> rows; // scale-major, layers in probe order
  std::vector<std::string> warnings;
};

inline const std::vector<std::string> kDefaultProbeLayers = {"relu1_1", "relu2_1", "relu3_1", "relu4_1"};
inline const std::vector<std::size_t> kDefaultSweepScales = {128, 256, 512, 1024, 2048};

// Resizes `image` to each shorter-side scale, runs the encoder up to the last
// probe layer and records per-channel feature mean / stddev at every probe.
// Scales beyond the image are clamped to its shorter side.
SweepResult stats_sweep(const Image& image, const Network& encoder, const std::vector<std::size_t>& scales,
                        const std::vector<std::string>& probes = kDefaultProbeLayers);
std::string sweep_to_csv(const SweepResult& sweep);

// Distance of each scale's statistics from the largest scale's, averaged over
// channels: deviation[layer][scale index].
struct SweepConvergence
{
  std::vector<std::string> layers;
  std::vector<std::size_t> scales;
  std::vector<std::vector<double>> mu_deviation;
  std::vector<std::vector<double>> sigma_deviation;

  // Fraction of (layer, statistic) sequences that are non-increasing in scale.
  double monotone_fraction() const;
  // Deviation (mu + sigma) at `scale` for every layer.
  std::vector<double> deviation_at(std::size_t scale) const;
};
SweepConvergence sweep_convergence(const SweepResult& sweep);

} // namespace tinstitch
