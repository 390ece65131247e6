#include "tinstitch/graph.hpp"

#include "tinstitch/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace tinstitch {

using nlohmann::json;

const char* to_string(LayerKind kind)
{
  switch (kind)
  {
  case LayerKind::Conv: return "conv";
  case LayerKind::Relu: return "relu";
  case LayerKind::MaxPool2: return "maxpool2";
  case LayerKind::UpsampleNearest: return "upsample_nearest";
  case LayerKind::PadReflect: return "pad_reflect";
  case LayerKind::PadZero: return "pad_zero";
  case LayerKind::Norm: return "norm";
  }
  return "?";
}

const char* to_string(NormVariant variant)
{
  switch (variant)
  {
  case NormVariant::In: return "in";
  case NormVariant::Tin: return "tin";
  case NormVariant::Iw: return "iw";
  case NormVariant::Tiw: return "tiw";
  case NormVariant::Adain: return "adain";
  }
  return "?";
}

LayerSpec LayerSpec::conv(std::size_t in, std::size_t out, std::size_t k, std::string weight, std::size_t pad,
                          std::size_t stride)
{
  LayerSpec l;
  l.kind = LayerKind::Conv;
  l.in_channels = in;
  l.out_channels = out;
  l.kernel = k;
  l.pad = pad;
  l.stride = stride;
  l.weight = std::move(weight);
  return l;
}

LayerSpec LayerSpec::relu(std::string name)
{
  LayerSpec l;
  l.kind = LayerKind::Relu;
  l.name = std::move(name);
  return l;
}

LayerSpec LayerSpec::maxpool2()
{
  LayerSpec l;
  l.kind = LayerKind::MaxPool2;
  return l;
}

LayerSpec LayerSpec::upsample(std::size_t factor)
{
  LayerSpec l;
  l.kind = LayerKind::UpsampleNearest;
  l.factor = factor;
  return l;
}

LayerSpec LayerSpec::pad_reflect(std::size_t amount)
{
  LayerSpec l;
  l.kind = LayerKind::PadReflect;
  l.pad = amount;
  return l;
}

LayerSpec LayerSpec::pad_zero(std::size_t amount)
{
  LayerSpec l;
  l.kind = LayerKind::PadZero;
  l.pad = amount;
  return l;
}

LayerSpec LayerSpec::norm(NormVariant variant, std::size_t channels, bool affine, std::string weight)
{
  LayerSpec l;
  l.kind = LayerKind::Norm;
  l.variant = variant;
  l.channels = channels;
  l.affine = affine;
  l.weight = std::move(weight);
  return l;
}

void NetworkGraph::validate() const
{
  if (input_channels == 0)
    throw ConfigError("graph input must have at least one channel");
  std::size_t c = input_channels;
  for (std::size_t i = 0; i < layers.size(); ++i)
  {
    const LayerSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
    switch (l.kind)
    {
    case LayerKind::Conv:
      if (l.in_channels != c)
        throw ConfigError(where + " expects " + std::to_string(l.in_channels) + " channels but receives " +
                          std::to_string(c));
      if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0)
        throw ConfigError(where + " needs positive out channels, kernel and stride");
      if (l.weight.empty())
        throw ConfigError(where + " has no weight name");
      c = l.out_channels;
      break;
    case LayerKind::UpsampleNearest:
      if (l.factor == 0)
        throw ConfigError(where + " needs a positive factor");
      break;
    case LayerKind::Norm:
      if (l.channels != c)
        throw ConfigError(where + " declares " + std::to_string(l.channels) + " channels but receives " +
                          std::to_string(c));
      if (!(l.eps > 0))
        throw ConfigError(where + " needs eps > 0");
      if (l.affine && l.weight.empty())
        throw ConfigError(where + " is affine but has no weight name");
      if (l.affine && (l.variant == NormVariant::Iw || l.variant == NormVariant::Tiw || l.variant == NormVariant::Adain))
        throw ConfigError(where + ": affine parameters only apply to in/tin");
      break;
    default:
      break;
    }
  }
}

std::size_t NetworkGraph::output_channels() const
{
  std::size_t c = input_channels;
  for (const auto& l : layers)
    if (l.kind == LayerKind::Conv)
      c = l.out_channels;
  return c;
}

std::size_t NetworkGraph::receptive_field_radius() const
{
  return receptive_field(*this);
}

std::vector<int> NetworkGraph::norm_layers() const
{
  std::vector<int> ids;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].kind == LayerKind::Norm)
      ids.push_back(static_cast<int>(i));
  return ids;
}

bool NetworkGraph::has_variant(NormVariant v) const
{
  for (const auto& l : layers)
    if (l.kind == LayerKind::Norm && l.variant == v)
      return true;
  return false;
}

std::optional<std::size_t> NetworkGraph::find_layer(const std::string& layer_name) const
{
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].name == layer_name)
      return i;
  return std::nullopt;
}

NetworkGraph NetworkGraph::truncated(std::size_t index) const
{
  if (index >= layers.size())
    throw ConfigError("cannot truncate a " + std::to_string(layers.size()) + "-layer graph at " +
                      std::to_string(index));
  NetworkGraph g{name, input_channels, {layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(index) + 1}};
  return g;
}

NetworkGraph NetworkGraph::truncated_at(const std::string& layer_name) const
{
  const auto idx = find_layer(layer_name);
  if (!idx)
    throw ConfigError("graph '" + name + "' has no layer named '" + layer_name + "'");
  return truncated(*idx);
}

std::size_t receptive_field(const NetworkGraph& graph)
{
  // Feature coordinate q maps to input coordinate scale * q + offset and
  // depends on input pixels within `radius` of it.
  double scale = 1.0;
  double offset = 0.0;
  double radius = 0.0;
  for (const auto& l : graph.layers)
  {
    switch (l.kind)
    {
    case LayerKind::Conv: {
      const double half = (static_cast<double>(l.kernel) - 1.0) / 2.0;
      offset += scale * (half - static_cast<double>(l.pad));
      radius += scale * half;
      scale *= static_cast<double>(l.stride);
      break;
    }
    case LayerKind::MaxPool2:
      offset += 0.5 * scale;
      radius += 0.5 * scale;
      scale *= 2.0;
      break;
    case LayerKind::UpsampleNearest: {
      const double f = static_cast<double>(l.factor);
      const double half = (f - 1.0) / (2.0 * f);
      offset -= scale * half;
      radius += scale * half;
      scale /= f;
      break;
    }
    case LayerKind::PadReflect:
    case LayerKind::PadZero:
      offset -= scale * static_cast<double>(l.pad);
      break;
    default:
      break;
    }
  }
  return static_cast<std::size_t>(std::ceil(std::abs(offset) + radius - 1e-9));
}

std::vector<Shape> infer_shapes(const NetworkGraph& graph, const Shape& input)
{
  graph.validate();
  if (input.c != graph.input_channels)
    throw ConfigError("graph '" + graph.name + "' expects " + std::to_string(graph.input_channels) +
                      " input channels, got " + std::to_string(input.c));
  std::vector<Shape> shapes;
  shapes.reserve(graph.layers.size());
  Shape s = input;
  for (std::size_t i = 0; i < graph.layers.size(); ++i)
  {
    const LayerSpec& l = graph.layers[i];
    switch (l.kind)
    {
    case LayerKind::Conv: {
      const std::size_t ph = s.h + 2 * l.pad;
      const std::size_t pw = s.w + 2 * l.pad;
      if (s.h == 0 || s.w == 0 || ph < l.kernel || pw < l.kernel)
        throw ShapeError("layer " + std::to_string(i) + ": input " + to_string(s) + " smaller than kernel");
      s = {s.n, l.out_channels, (ph - l.kernel) / l.stride + 1, (pw - l.kernel) / l.stride + 1};
      break;
    }
    case LayerKind::MaxPool2:
      s = {s.n, s.c, (s.h + 1) / 2, (s.w + 1) / 2};
      break;
    case LayerKind::UpsampleNearest:
      s = {s.n, s.c, s.h * l.factor, s.w * l.factor};
      break;
    case LayerKind::PadReflect:
      if (l.pad >= s.h || l.pad >= s.w)
        throw ShapeError("layer " + std::to_string(i) + ": reflect pad " + std::to_string(l.pad) +
                         " too large for " + to_string(s));
      [[fallthrough]];
    case LayerKind::PadZero:
      s = {s.n, s.c, s.h + 2 * l.pad, s.w + 2 * l.pad};
      break;
    default:
      break;
    }
    shapes.push_back(s);
  }
  return shapes;
}

namespace {

LayerKind kind_from(const std::string& s)
{
  if (s == "conv") return LayerKind::Conv;
  if (s == "relu") return LayerKind::Relu;
  if (s == "maxpool2") return LayerKind::MaxPool2;
  if (s == "upsample_nearest") return LayerKind::UpsampleNearest;
  if (s == "pad_reflect") return LayerKind::PadReflect;
  if (s == "pad_zero") return LayerKind::PadZero;
  if (s == "norm") return LayerKind::Norm;
  throw LoadError(LoadErrorKind::BadFormat, "unknown layer kind '" + s + "'");
}

NormVariant variant_from(const std::string& s)
{
  if (s == "in") return NormVariant::In;
  if (s == "tin") return NormVariant::Tin;
  if (s == "iw") return NormVariant::Iw;
  if (s == "tiw") return NormVariant::Tiw;
  if (s == "adain") return NormVariant::Adain;
  throw LoadError(LoadErrorKind::BadFormat, "unknown norm variant '" + s + "'");
}

} // namespace

NetworkGraph parse_graph(const std::string& json_text)
{
  NetworkGraph g;
  try
  {
    const json doc = json::parse(json_text);
    if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array())
      throw LoadError(LoadErrorKind::BadFormat, "graph JSON needs a top-level 'layers' array");
    g.name = doc.value("name", "");
    g.input_channels = doc.value("input_channels", std::size_t{3});
    for (const json& j : doc["layers"])
    {
      LayerSpec l;
      l.kind = kind_from(j.at("kind").get<std::string>());
      l.name = j.value("name", "");
      l.weight = j.value("weight", "");
      switch (l.kind)
      {
      case LayerKind::Conv:
        l.in_channels = j.at("in").get<std::size_t>();
        l.out_channels = j.at("out").get<std::size_t>();
        l.kernel = j.at("k").get<std::size_t>();
        l.stride = j.value("stride", std::size_t{1});
        l.pad = j.value("pad", std::size_t{0});
        break;
      case LayerKind::UpsampleNearest:
        l.factor = j.value("factor", std::size_t{2});
        break;
      case LayerKind::PadReflect:
      case LayerKind::PadZero:
        l.pad = j.at("pad").get<std::size_t>();
        break;
      case LayerKind::Norm:
        l.variant = variant_from(j.at("variant").get<std::string>());
        l.channels = j.at("channels").get<std::size_t>();
        l.affine = j.value("affine", false);
        l.eps = j.value("eps", 1e-5);
        break;
      default:
        break;
      }
      g.layers.push_back(std::move(l));
    }
  }
  catch (const json::exception& e)
  {
    throw LoadError(LoadErrorKind::BadFormat, std::string("malformed graph JSON: ") + e.what());
  }
  g.validate();
  return g;
}

NetworkGraph load_graph(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw LoadError(LoadErrorKind::Io, "cannot open graph " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str());
}

std::string graph_to_json(const NetworkGraph& graph)
{
  json doc;
  doc["name"] = graph.name;
  doc["input_channels"] = graph.input_channels;
  json layers = json::array();
  for (const auto& l : graph.layers)
  {
    json j;
    j["kind"] = to_string(l.kind);
    if (!l.name.empty())
      j["name"] = l.name;
    switch (l.kind)
    {
    case LayerKind::Conv:
      j["in"] = l.in_channels;
      j["out"] = l.out_channels;
      j["k"] = l.kernel;
      j["stride"] = l.stride;
      j["pad"] = l.pad;
      break;
    case LayerKind::UpsampleNearest:
      j["factor"] = l.factor;
      break;
    case LayerKind::PadReflect:
    case LayerKind::PadZero:
      j["pad"] = l.pad;
      break;
    case LayerKind::Norm:
      j["variant"] = to_string(l.variant);
      j["channels"] = l.channels;
      j["affine"] = l.affine;
      j["eps"] = l.eps;
      break;
    default:
      break;
    }
    if (!l.weight.empty())
      j["weight"] = l.weight;
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2);
}

void save_graph(const NetworkGraph& graph, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw LoadError(LoadErrorKind::Io, "cannot write graph " + path.string());
  out << graph_to_json(graph) << '\n';
}

} // namespace tinstitch
