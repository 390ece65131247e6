#include "tinstitch/network.hpp"

#include "tinstitch/error.hpp"

#include <algorithm>

namespace tinstitch {

namespace {

void expect_dims(const StoredTensor& t, std::vector<std::uint32_t> dims, const std::string& name)
{
  if (t.dims != dims)
  {
    std::string want, got;
    for (auto d : dims)
      want += std::to_string(d) + " ";
    for (auto d : t.dims)
      got += std::to_string(d) + " ";
    throw LoadError(LoadErrorKind::BadFormat, "weight '" + name + "' has dims [ " + got + "], graph needs [ " + want + "]");
  }
}

template <typename T>
const T& entry_as(const StatsBank& bank, int layer)
{
  const BankEntry& e = bank.get(layer);
  if (const T* t = std::get_if<T>(&e))
    return *t;
  throw StateError("statistics stored for layer " + std::to_string(layer) + " do not match its norm variant");
}

} // namespace

Network Network::bind(NetworkGraph graph, const WeightStore& weights)
{
  graph.validate();
  Network net;
  net.bound_.resize(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i)
  {
    const LayerSpec& l = graph.layers[i];
    Bound& b = net.bound_[i];
    if (l.kind == LayerKind::Conv)
    {
      const std::string wn = l.weight + ".weight";
      const std::string bn = l.weight + ".bias";
      const StoredTensor& w = weights.get(wn);
      const StoredTensor& bias = weights.get(bn);
      const auto o = static_cast<std::uint32_t>(l.out_channels);
      const auto in = static_cast<std::uint32_t>(l.in_channels);
      const auto k = static_cast<std::uint32_t>(l.kernel);
      expect_dims(w, {o, in, k, k}, wn);
      expect_dims(bias, {o}, bn);
      b.conv = {l.out_channels, l.in_channels, l.kernel, l.kernel, w.values, bias.values};
      b.conv.validate();
    }
    else if (l.kind == LayerKind::Norm)
    {
      if (l.affine)
      {
        const std::string gn = l.weight + ".gamma";
        const std::string bn = l.weight + ".beta";
        const StoredTensor& g = weights.get(gn);
        const StoredTensor& be = weights.get(bn);
        expect_dims(g, {static_cast<std::uint32_t>(l.channels)}, gn);
        expect_dims(be, {static_cast<std::uint32_t>(l.channels)}, bn);
        b.affine = {g.values, be.values};
      }
      else
      {
        b.affine = AffineParams::identity(l.channels);
      }
    }
  }
  net.graph_ = std::move(graph);
  return net;
}

const Tensor& Network::run(const Tensor& x, StatsBank* capture, const StatsBank& bank, Workspace& ws,
                           const ExecOptions& opts, std::optional<std::size_t> stop_after) const
{
  if (x.c() != graph_.input_channels)
    throw ConfigError("graph '" + graph_.name + "' expects " + std::to_string(graph_.input_channels) +
                      " input channels, got " + std::to_string(x.c()));
  const bool style_pass = stop_after.has_value();
  const Tensor* cur = &x;
  auto spare = [&]() -> Tensor& { return cur == &ws.a ? ws.b : ws.a; };
  // In-place layers must not modify the caller's input.
  auto writable = [&]() -> Tensor& {
    if (cur == &ws.a || cur == &ws.b)
      return const_cast<Tensor&>(*cur);
    Tensor& dst = spare();
    dst.reshape(cur->shape());
    std::copy(cur->values().begin(), cur->values().end(), dst.values().begin());
    cur = &dst;
    return dst;
  };

  for (std::size_t i = 0; i < graph_.layers.size(); ++i)
  {
    if ((stop_after && i > *stop_after) || (opts.last_layer && i > *opts.last_layer))
      break;
    const LayerSpec& l = graph_.layers[i];
    const int id = static_cast<int>(i);
    switch (l.kind)
    {
    case LayerKind::Conv: {
      Tensor& dst = spare();
      conv2d(*cur, bound_[i].conv, l.stride, PadSpec::uniform(l.pad), dst);
      cur = &dst;
      break;
    }
    case LayerKind::Relu:
      relu_inplace(writable());
      break;
    case LayerKind::MaxPool2: {
      Tensor& dst = spare();
      maxpool2(*cur, dst);
      cur = &dst;
      break;
    }
    case LayerKind::UpsampleNearest: {
      Tensor& dst = spare();
      resize_nearest(*cur, l.factor, dst);
      cur = &dst;
      break;
    }
    case LayerKind::PadReflect:
    case LayerKind::PadZero: {
      Tensor& dst = spare();
      pad(*cur, PadSpec::uniform(l.pad, l.kind == LayerKind::PadReflect ? PadMode::Reflect : PadMode::Zero), dst);
      cur = &dst;
      break;
    }
    case LayerKind::Norm: {
      const bool own = l.variant == NormVariant::In || l.variant == NormVariant::Iw || opts.per_input_stats ||
                       style_pass;
      switch (l.variant)
      {
      case NormVariant::In:
      case NormVariant::Tin: {
        ChannelStats local;
        const ChannelStats* stats = nullptr;
        if (own || capture)
        {
          local = channel_stats(*cur, l.eps);
          stats = &local;
          if (capture && !own)
            capture->put(id, local);
        }
        else
        {
          stats = &entry_as<ChannelStats>(bank, id);
        }
        Tensor& t = writable();
        thumbnail_instance_norm(t, *stats, bound_[i].affine, t);
        break;
      }
      case NormVariant::Iw:
      case NormVariant::Tiw: {
        WhiteningStats local;
        const WhiteningStats* stats = nullptr;
        if (own || capture)
        {
          local = whitening_stats(*cur, l.eps);
          stats = &local;
          if (capture && !own)
            capture->put(id, local);
        }
        else
        {
          stats = &entry_as<WhiteningStats>(bank, id);
        }
        Tensor& dst = spare();
        thumbnail_instance_whiten(*cur, *stats, dst);
        cur = &dst;
        break;
      }
      case NormVariant::Adain: {
        if (style_pass)
        {
          const_cast<StatsBank&>(bank).set_style(id, channel_stats(*cur, l.eps));
          break;
        }
        AdainStats local;
        const ChannelStats* content = nullptr;
        if (own || capture)
        {
          local.content = channel_stats(*cur, l.eps);
          content = &local.content;
          if (capture && !own)
            capture->put(id, local);
        }
        else
        {
          content = &entry_as<AdainStats>(bank, id).content;
        }
        Tensor& dst = spare();
        adain_transfer(*content, bank.style(id), *cur, dst);
        if (opts.alpha != 1.f)
          blend_style_inplace(*cur, dst, opts.alpha);
        cur = &dst;
        break;
      }
      }
      break;
    }
    }
    if (opts.observe)
      opts.observe(i, *cur);
  }
  return *cur;
}

const Tensor& Network::forward(const Tensor& x, StatsBank& bank, Workspace& ws, const ExecOptions& opts) const
{
  StatsBank* capture = bank.mode() == BankMode::Capture ? &bank : nullptr;
  return run(x, capture, bank, ws, opts, std::nullopt);
}

const Tensor& Network::forward(const Tensor& x, const StatsBank& bank, Workspace& ws, const ExecOptions& opts) const
{
  if (bank.mode() != BankMode::Apply)
    throw StateError("a shared statistics bank must be frozen before patch passes");
  return run(x, nullptr, bank, ws, opts, std::nullopt);
}

Tensor Network::forward(const Tensor& x, StatsBank& bank, const ExecOptions& opts) const
{
  Workspace ws;
  ws.reserve(max_activation(x.shape()));
  return forward(x, bank, ws, opts);
}

Tensor Network::forward(const Tensor& x, const StatsBank& bank, const ExecOptions& opts) const
{
  Workspace ws;
  ws.reserve(max_activation(x.shape()));
  return forward(x, bank, ws, opts);
}

void Network::capture_style(const Tensor& style, StatsBank& bank) const
{
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < graph_.layers.size(); ++i)
    if (graph_.layers[i].kind == LayerKind::Norm && graph_.layers[i].variant == NormVariant::Adain)
      last = i;
  if (!last)
    return;
  Workspace ws;
  ws.reserve(max_activation(style.shape()));
  run(style, nullptr, bank, ws, {}, last);
}

void Network::check_patch_mode(bool allow_plain_norm) const
{
  if (allow_plain_norm)
    return;
  for (std::size_t i = 0; i < graph_.layers.size(); ++i)
  {
    const LayerSpec& l = graph_.layers[i];
    if (l.kind == LayerKind::Norm && (l.variant == NormVariant::In || l.variant == NormVariant::Iw))
      throw PatchNormError("norm layer " + std::to_string(i) + " uses plain '" + to_string(l.variant) +
                        "': statistics computed per patch make the stylized patches inconsistent in style. "
                        "Use the thumbnail variants (tin/tiw/adain) for patch-wise execution.");
  }
}

std::size_t Network::max_activation(const Shape& input) const
{
  std::size_t m = 0;
  for (const Shape& s : infer_shapes(graph_, input))
    m = std::max(m, s.numel());
  return m;
}

std::size_t Network::weight_bytes() const
{
  std::size_t floats = 0;
  for (const Bound& b : bound_)
    floats += b.conv.kernel.size() + b.conv.bias.size() + b.affine.gamma.size() + b.affine.beta.size();
  return floats * sizeof(float);
}

Tensor forward(const NetworkGraph& graph, const WeightStore& weights, const Tensor& x, StatsBank& bank,
               const ExecOptions& opts)
{
  return Network::bind(graph, weights).forward(x, bank, opts);
}

namespace {

StoredTensor matrix(std::size_t rows, std::size_t cols, const std::vector<float>& v)
{
  return {{static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)}, v};
}

std::string key(int layer, const char* field)
{
  return "stats/" + std::to_string(layer) + "/" + field;
}

ChannelStats read_channel(const WeightStore& store, int layer, const char* mean_name, const char* std_name)
{
  const StoredTensor& m = store.get(key(layer, mean_name));
  const StoredTensor& s = store.get(key(layer, std_name));
  if (m.dims.size() != 2 || m.dims != s.dims)
    throw LoadError(LoadErrorKind::BadFormat, "statistics for layer " + std::to_string(layer) + " are malformed");
  return {m.dims[0], m.dims[1], m.values, s.values};
}

} // namespace

WeightStore bank_to_store(const StatsBank& bank)
{
  WeightStore store;
  for (const auto& [id, entry] : bank.entries())
  {
    if (const auto* cs = std::get_if<ChannelStats>(&entry))
    {
      store.add(key(id, "mean"), matrix(cs->n, cs->c, cs->mean));
      store.add(key(id, "std"), matrix(cs->n, cs->c, cs->stddev));
    }
    else if (const auto* ws = std::get_if<WhiteningStats>(&entry))
    {
      store.add(key(id, "mean"), matrix(ws->n, ws->c, ws->mean));
      store.add(key(id, "invsqrtcov"),
                {{static_cast<std::uint32_t>(ws->n), static_cast<std::uint32_t>(ws->c),
                  static_cast<std::uint32_t>(ws->c)},
                 ws->inv_sqrt_cov});
    }
    else
    {
      const ChannelStats& c = std::get<AdainStats>(entry).content;
      store.add(key(id, "mean"), matrix(c.n, c.c, c.mean));
      store.add(key(id, "std"), matrix(c.n, c.c, c.stddev));
    }
  }
  for (const auto& [id, s] : bank.styles())
  {
    store.add(key(id, "style_mean"), matrix(s.n, s.c, s.mean));
    store.add(key(id, "style_std"), matrix(s.n, s.c, s.stddev));
  }
  return store;
}

StatsBank bank_from_store(const WeightStore& store, const NetworkGraph& graph)
{
  StatsBank bank;
  for (int id : graph.norm_layers())
  {
    const LayerSpec& l = graph.layers[static_cast<std::size_t>(id)];
    if (store.find(key(id, "style_mean")))
      bank.set_style(id, read_channel(store, id, "style_mean", "style_std"));
    if (!store.find(key(id, "mean")))
      continue;
    switch (l.variant)
    {
    case NormVariant::In:
    case NormVariant::Tin:
      bank.put(id, read_channel(store, id, "mean", "std"));
      break;
    case NormVariant::Adain:
      bank.put(id, AdainStats{read_channel(store, id, "mean", "std")});
      break;
    case NormVariant::Iw:
    case NormVariant::Tiw: {
      const StoredTensor& m = store.get(key(id, "mean"));
      const StoredTensor& inv = store.get(key(id, "invsqrtcov"));
      if (m.dims.size() != 2 || inv.dims.size() != 3 || inv.dims[0] != m.dims[0] || inv.dims[1] != m.dims[1] ||
          inv.dims[2] != m.dims[1])
        throw LoadError(LoadErrorKind::BadFormat, "whitening statistics for layer " + std::to_string(id) +
                                                    " are malformed");
      bank.put(id, WhiteningStats{m.dims[0], m.dims[1], m.values, inv.values});
      break;
    }
    }
  }
  bank.freeze();
  return bank;
}

void save_bank(const StatsBank& bank, const std::filesystem::path& path)
{
  save_weights(bank_to_store(bank), path);
}

StatsBank load_bank(const std::filesystem::path& path, const NetworkGraph& graph)
{
  return bank_from_store(load_weights(path), graph);
}

} // namespace tinstitch
