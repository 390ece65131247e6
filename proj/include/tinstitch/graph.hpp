#pragma once

#include "tinstitch/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tinstitch {

enum class LayerKind
{
  Conv,
  Relu,
  MaxPool2,
  UpsampleNearest,
  PadReflect,
  PadZero,
  Norm,
};

enum class NormVariant
{
  In,   // per-input mean/std
  Tin,  // mean/std captured on the thumbnail
  Iw,   // per-input whitening
  Tiw,  // whitening captured on the thumbnail
  Adain // thumbnail content stats re-coloured with style stats
};

const char* to_string(LayerKind kind);
const char* to_string(NormVariant variant);

struct LayerSpec
{
  LayerKind kind = LayerKind::Relu;
  std::string name;   // optional label, e.g. "relu4_1"
  std::string weight; // weight prefix: <weight>.weight/.bias or <weight>.gamma/.beta

  // conv
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad = 0; // zero padding for conv; amount for pad_* layers

  std::size_t factor = 2; // upsample_nearest

  // norm
  NormVariant variant = NormVariant::Tin;
  std::size_t channels = 0;
  bool affine = false;
  double eps = 1e-5;

  static LayerSpec conv(std::size_t in, std::size_t out, std::size_t k, std::string weight,
                        std::size_t pad = 0, std::size_t stride = 1);
  static LayerSpec relu(std::string name = {});
  static LayerSpec maxpool2();
  static LayerSpec upsample(std::size_t factor = 2);
  static LayerSpec pad_reflect(std::size_t amount);
  static LayerSpec pad_zero(std::size_t amount);
  static LayerSpec norm(NormVariant variant, std::size_t channels, bool affine = false, std::string weight = {});
};

struct NetworkGraph
{
  std::string name;
  std::size_t input_channels = 3;
  std::vector<LayerSpec> layers;

  // Throws ConfigError when channel counts do not chain or a layer is malformed.
  void validate() const;
  std::size_t output_channels() const;
  std::size_t receptive_field_radius() const;

  std::vector<int> norm_layers() const;
  bool has_variant(NormVariant v) const;
  std::optional<std::size_t> find_layer(const std::string& name) const;

  // Layers [0, index] inclusive.
  NetworkGraph truncated(std::size_t index) const;
  NetworkGraph truncated_at(const std::string& name) const;
};

// Radius r such that an output pixel depends only on input pixels within
// Chebyshev distance r of its position mapped to input coordinates. Norm
// layers count as pointwise (statistics fixed).
std::size_t receptive_field(const NetworkGraph& graph);

// Output shape of each layer for the given input shape.
std::vector<Shape> infer_shapes(const NetworkGraph& graph, const Shape& input);

NetworkGraph parse_graph(const std::string& json_text);
NetworkGraph load_graph(const std::filesystem::path& path);
std::string graph_to_json(const NetworkGraph& graph);
void save_graph(const NetworkGraph& graph, const std::filesystem::path& path);

} // namespace tinstitch
