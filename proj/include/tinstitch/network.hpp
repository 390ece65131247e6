#pragma once

#include "tinstitch/graph.hpp"
#include "tinstitch/normstats.hpp"
#include "tinstitch/ops.hpp"
#include "tinstitch/tensor.hpp"
#include "tinstitch/weights.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace tinstitch {

struct ExecOptions
{
  // Style weight for adain layers: alpha * adain(x) + (1 - alpha) * x.
  float alpha = 1.f;
  // Thumbnail-conditioned layers (tin/tiw/adain) ignore the bank and use the
  // statistics of their own input, i.e. behave as plain IN/IW. Only used to
  // reproduce the per-patch inconsistency.
  bool per_input_stats = false;
  // Called with (layer index, output) after every layer.
  std::function<void(std::size_t, const Tensor&)> observe;
  // Stop after this layer instead of running the whole graph.
  std::optional<std::size_t> last_layer;
};

// Two activation buffers the executor alternates between. Reserve once for the
// largest input expected and forward() never allocates again.
struct Workspace
{
  Tensor a;
  Tensor b;

  void reserve(std::size_t elements)
  {
    a.reserve(elements);
    b.reserve(elements);
  }
  std::size_t capacity_bytes() const noexcept { return (a.capacity() + b.capacity()) * sizeof(float); }
};

// A graph with its weights resolved into kernels. Immutable after bind(), so
// one instance can be shared by concurrent workers.
class Network
{
public:
  static Network bind(NetworkGraph graph, const WeightStore& weights);

  const NetworkGraph& graph() const noexcept { return graph_; }

  // Capture mode: thumbnail-conditioned layers record the statistics of their
  // input into `bank` and apply them. Apply mode: they read `bank`.
  Tensor forward(const Tensor& x, StatsBank& bank, const ExecOptions& opts = {}) const;
  Tensor forward(const Tensor& x, const StatsBank& bank, const ExecOptions& opts = {}) const;

  // Workspace variants; the result lives in `ws` (or is `x` for an empty graph).
  const Tensor& forward(const Tensor& x, StatsBank& bank, Workspace& ws, const ExecOptions& opts = {}) const;
  const Tensor& forward(const Tensor& x, const StatsBank& bank, Workspace& ws, const ExecOptions& opts = {}) const;

  // Runs the style image through the graph and records channel statistics at
  // every adain layer as style statistics. Stops after the last adain layer.
  void capture_style(const Tensor& style, StatsBank& bank) const;

  // Throws ConfigError for plain in/iw layers, which compute statistics per
  // patch, unless explicitly allowed.
  void check_patch_mode(bool allow_plain_norm) const;

  // Largest activation (elements) over all layers for this input shape.
  std::size_t max_activation(const Shape& input) const;
  std::size_t weight_bytes() const;

private:
  struct Bound
  {
    ConvWeights conv;
    AffineParams affine;
  };

  const Tensor& run(const Tensor& x, StatsBank* capture, const StatsBank& bank, Workspace& ws,
                    const ExecOptions& opts, std::optional<std::size_t> stop_after) const;

  NetworkGraph graph_;
  std::vector<Bound> bound_;
};

// Convenience wrappers mirroring the free-function form of the executor.
Tensor forward(const NetworkGraph& graph, const WeightStore& weights, const Tensor& x, StatsBank& bank,
               const ExecOptions& opts = {});

// Sidecar for captured statistics in the weight container format. Names:
// stats/<layer>/mean, std, invsqrtcov, style_mean, style_std. Loading needs
// the graph to tell adain entries from tin entries; the bank comes back frozen.
WeightStore bank_to_store(const StatsBank& bank);
StatsBank bank_from_store(const WeightStore& store, const NetworkGraph& graph);
void save_bank(const StatsBank& bank, const std::filesystem::path& path);
StatsBank load_bank(const std::filesystem::path& path, const NetworkGraph& graph);

} // namespace tinstitch
