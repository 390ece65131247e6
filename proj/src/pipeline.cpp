#include "tinstitch/pipeline.hpp"

#include "tinstitch/error.hpp"
#include "tinstitch/memory.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace tinstitch {

void PipelineConfig::validate() const
{
  if (S < 1 || K <= S)
    throw ConfigError("patch size must exceed stride (K=" + std::to_string(K) + ", S=" + std::to_string(S) + ")");
  if (thumb_short_side < 1)
    throw ConfigError("thumbnail size must be positive");
  if (batch_size < 1)
    throw ConfigError("batch size must be at least 1");
  if (workers < 1)
    throw ConfigError("worker count must be at least 1");
  if (style_size < 1)
    throw ConfigError("style size must be positive");
  if (!(alpha >= 0.f && alpha <= 1.f))
    throw ConfigError("style weight alpha must lie in [0, 1]");
}

std::pair<std::size_t, std::size_t> thumbnail_dims(std::size_t width, std::size_t height, std::size_t short_side)
{
  if (width == 0 || height == 0)
    throw ShapeError("thumbnail of an empty image");
  auto scaled = [&](std::size_t side, std::size_t shorter) {
    const double v = static_cast<double>(side) * static_cast<double>(short_side) / static_cast<double>(shorter);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(v)));
  };
  if (width <= height)
    return {short_side, scaled(height, width)};
  return {scaled(width, height), short_side};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Two live activations per layer step: the larger of (input + output) over all layers.
std::size_t live_pair_elements(const NetworkGraph& graph, const Shape& input)
{
  std::size_t best = 0;
  Shape prev = input;
  for (const Shape& s : infer_shapes(graph, input))
  {
    best = std::max(best, prev.numel() + s.numel());
    prev = s;
  }
  return best;
}

std::size_t bank_estimate(const NetworkGraph& graph)
{
  std::size_t floats = 0;
  for (int id : graph.norm_layers())
  {
    const LayerSpec& l = graph.layers[static_cast<std::size_t>(id)];
    switch (l.variant)
    {
    case NormVariant::Iw:
    case NormVariant::Tiw:
      floats += l.channels + l.channels * l.channels;
      break;
    case NormVariant::Adain:
      floats += 4 * l.channels;
      break;
    default:
      floats += 2 * l.channels;
    }
  }
  return floats * sizeof(float);
}

bool needs_style(const NetworkGraph& graph)
{
  return graph.has_variant(NormVariant::Adain);
}

void crop_top_left(const Tensor& src, std::size_t h, std::size_t w, Tensor& dst)
{
  if (src.h() < h || src.w() < w)
    throw ShapeError("network output " + to_string(src.shape()) + " is smaller than its " + std::to_string(w) + "x" +
                     std::to_string(h) + " input window");
  extract_patch(src, {0, 0, w, h}, dst);
}

} // namespace

MemoryReport estimate_memory(const NetworkGraph& graph, const PipelineConfig& cfg, std::size_t width,
                             std::size_t height)
{
  MemoryReport r;
  const auto [tw, th] = thumbnail_dims(width, height, cfg.thumb_short_side);
  const Shape thumb{1, graph.input_channels, th, tw};
  r.thumbnail_bytes = (thumb.numel() + live_pair_elements(graph, thumb)) * sizeof(float);
  const Shape patch{1, graph.input_channels, cfg.K, cfg.K};
  r.patch_bytes = cfg.batch_size * (patch.numel() + live_pair_elements(graph, patch)) * sizeof(float);
  std::size_t weights = 0;
  for (const LayerSpec& l : graph.layers)
  {
    if (l.kind == LayerKind::Conv)
      weights += l.out_channels * l.in_channels * l.kernel * l.kernel + l.out_channels;
    else if (l.kind == LayerKind::Norm && l.affine)
      weights += 2 * l.channels;
  }
  r.weight_bytes = weights * sizeof(float);
  r.bank_bytes = bank_estimate(graph);
  r.total_bytes = std::max(r.thumbnail_bytes, cfg.workers * r.patch_bytes) + r.weight_bytes + r.bank_bytes;
  r.output_band_bytes = width * std::min(cfg.K, height) * 3;
  r.output_full_bytes = width * height * 3;
  return r;
}

std::string memory_report_json(const MemoryReport& r)
{
  nlohmann::json j;
  j["thumbnail_bytes"] = r.thumbnail_bytes;
  j["patch_bytes"] = r.patch_bytes;
  j["weight_bytes"] = r.weight_bytes;
  j["bank_bytes"] = r.bank_bytes;
  j["total_bytes"] = r.total_bytes;
  j["output_band_bytes"] = r.output_band_bytes;
  j["output_full_bytes"] = r.output_full_bytes;
  return j.dump(2);
}

CaptureResult capture_statistics(const Network& net, const Tensor& thumbnail, const Tensor* style,
                                 const ExecOptions& opts)
{
  CaptureResult res;
  if (needs_style(net.graph()))
  {
    if (!style)
      throw ConfigError("graph '" + net.graph().name + "' has adain layers and needs a style image");
    net.capture_style(*style, res.bank);
  }
  Workspace ws;
  ws.reserve(net.max_activation(thumbnail.shape()));
  const Tensor& out = net.forward(thumbnail, res.bank, ws, opts);
  res.stylized = out;
  res.bank.freeze();
  return res;
}

namespace {

struct WorkerState
{
  Workspace ws;
  Tensor input;
};

} // namespace

StylizeResult stylize(const Image& content, const Image* style, const Network& net, const PipelineConfig& cfg,
                      RowSink& sink)
{
  cfg.validate();
  net.check_patch_mode(cfg.allow_plain_norm);
  if (net.graph().input_channels != 3 || net.graph().output_channels() != 3)
    throw ConfigError("stylization graphs map RGB to RGB");
  const std::size_t W = content.width;
  const std::size_t H = content.height;

  StylizeResult res;
  res.plan = plan_tiles(W, H, cfg.K, cfg.S);
  res.estimate = estimate_memory(net.graph(), cfg, W, H);
  ExecOptions opts;
  opts.alpha = cfg.alpha;

  PeakScope scope;
  auto t0 = Clock::now();
  {
    std::optional<Tensor> style_tensor;
    if (needs_style(net.graph()))
    {
      if (!style)
        throw ConfigError("graph '" + net.graph().name + "' has adain layers and needs a style image");
      style_tensor = image_resize_to_tensor(*style, cfg.style_size, cfg.style_size);
    }
    const auto [tw, th] = thumbnail_dims(W, H, cfg.thumb_short_side);
    Tensor thumb = image_resize_to_tensor(content, th, tw);
    CaptureResult cap = capture_statistics(net, thumb, style_tensor ? &*style_tensor : nullptr, opts);
    res.bank = std::move(cap.bank);
    if (cfg.retain_thumbnail)
      res.stylized_thumbnail = std::move(cap.stylized);
  }
  res.thumbnail_seconds = seconds_since(t0);

  t0 = Clock::now();
  const TilePlan& plan = res.plan;
  const Shape patch_shape{cfg.batch_size, 3, cfg.K, cfg.K};
  std::vector<WorkerState> states(cfg.workers);
  for (WorkerState& s : states)
  {
    s.ws.reserve(net.max_activation(patch_shape));
    s.input.reserve(patch_shape.numel());
  }

  sink.begin(W, H);
  std::vector<std::uint8_t> band;
  const std::size_t cols = plan.cols();
  for (std::size_t r = 0; r < plan.rows(); ++r)
  {
    const Rect& first_own = plan.ownership[r * cols];
    const std::size_t band_y = first_own.y;
    const std::size_t band_h = first_own.h;
    band.assign(W * band_h * 3, 0);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](WorkerState& st) {
      try
      {
        for (;;)
        {
          const std::size_t c0 = next.fetch_add(cfg.batch_size);
          if (c0 >= cols)
            break;
          const std::size_t count = std::min(cfg.batch_size, cols - c0);
          const Rect& win = plan.windows[r * cols + c0];
          st.input.reshape({count, 3, win.h, win.w});
          for (std::size_t j = 0; j < count; ++j)
            image_region_to_tensor(content, plan.windows[r * cols + c0 + j], st.input, j);
          const Tensor& out = net.forward(st.input, static_cast<const StatsBank&>(res.bank), st.ws, opts);
          if (out.h() < win.h || out.w() < win.w || out.c() != 3)
            throw ShapeError("network output " + to_string(out.shape()) + " does not cover its window " +
                             to_string(win));
          for (std::size_t j = 0; j < count; ++j)
          {
            const std::size_t idx = r * cols + c0 + j;
            const Rect& w = plan.windows[idx];
            const Rect& own = plan.ownership[idx];
            for (std::size_t ch = 0; ch < 3; ++ch)
            {
              const float* src = out.plane(j, ch);
              for (std::size_t y = own.y; y < own.bottom(); ++y)
              {
                const float* srow = src + (y - w.y) * out.w();
                std::uint8_t* drow = band.data() + (y - band_y) * W * 3 + ch;
                for (std::size_t x = own.x; x < own.right(); ++x)
                  drow[x * 3] = unit_to_byte(srow[x - w.x]);
              }
            }
          }
        }
      }
      catch (...)
      {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next.store(cols);
      }
    };

    const std::size_t jobs = (cols + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t nthreads = std::min(cfg.workers, jobs);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < nthreads; ++t)
      pool.emplace_back(work, std::ref(states[t]));
    work(states[0]);
    for (std::thread& t : pool)
      t.join();
    if (failure)
      std::rethrow_exception(failure);
    sink.write_rows(band_y, band_h, band);
  }
  sink.finish();
  res.patch_seconds = seconds_since(t0);
  res.measured_peak_bytes = scope.transient_peak();
  return res;
}

Image stylize(const Image& content, const Image* style, const Network& net, const PipelineConfig& cfg,
              StylizeResult* result)
{
  ImageSink sink;
  StylizeResult r = stylize(content, style, net, cfg, sink);
  if (result)
    *result = std::move(r);
  return sink.take();
}

StylizeResult stylize_file(const std::filesystem::path& content, const std::optional<std::filesystem::path>& style,
                           const Network& net, const PipelineConfig& cfg, const std::filesystem::path& out)
{
  const Image c = load_png(content);
  std::optional<Image> s;
  if (style)
    s = load_png(*style);
  PngRowWriter writer(out);
  return stylize(c, s ? &*s : nullptr, net, cfg, writer);
}

std::vector<Tensor> run_patches(const Network& net, const StatsBank& bank, const Tensor& content,
                                const TilePlan& plan, const ExecOptions& opts)
{
  std::vector<Tensor> owned;
  Workspace ws;
  ws.reserve(net.max_activation({content.n(), content.c(), plan.windows.front().h, plan.windows.front().w}));
  Tensor patch;
  for (std::size_t i = 0; i < plan.size(); ++i)
  {
    const Rect& win = plan.windows[i];
    const Rect& own = plan.ownership[i];
    extract_patch(content, win, patch);
    const Tensor& out = net.forward(patch, bank, ws, opts);
    if (out.h() < win.h || out.w() < win.w)
      throw ShapeError("network output " + to_string(out.shape()) + " does not cover its window " + to_string(win));
    owned.push_back(extract_patch(out, {own.x - win.x, own.y - win.y, own.w, own.h}));
  }
  return owned;
}

Tensor run_tiled(const Network& net, const StatsBank& bank, const Tensor& content, std::size_t K, std::size_t S,
                 const ExecOptions& opts)
{
  const TilePlan plan = plan_tiles(content.w(), content.h(), K, S);
  Workspace ws;
  ws.reserve(net.max_activation({content.n(), content.c(), plan.windows.front().h, plan.windows.front().w}));
  Tensor patch, cropped, out;
  for (std::size_t i = 0; i < plan.size(); ++i)
  {
    const Rect& win = plan.windows[i];
    extract_patch(content, win, patch);
    const Tensor& result = net.forward(patch, bank, ws, opts);
    crop_top_left(result, win.h, win.w, cropped);
    if (i == 0)
      out = Tensor({cropped.n(), cropped.c(), plan.height, plan.width});
    for (std::size_t n = 0; n < cropped.n(); ++n)
      place_patch(cropped, plan, i, out, n, n);
  }
  return out;
}

SweepResult stats_sweep(const Image& image, const Network& encoder, const std::vector<std::size_t>& scales,
                        const std::vector<std::string>& probes)
{
  if (!std::is_sorted(scales.begin(), scales.end()))
    throw ConfigError("sweep scales must be ascending");
  std::vector<std::size_t> probe_index;
  for (const std::string& p : probes)
  {
    const auto idx = encoder.graph().find_layer(p);
    if (!idx)
      throw ConfigError("probe layer '" + p + "' not found in graph '" + encoder.graph().name + "'");
    probe_index.push_back(*idx);
  }
  if (probe_index.empty())
    throw ConfigError("stats sweep needs at least one probe layer");
  const std::size_t shorter = std::min(image.width, image.height);

  SweepResult res;
  ExecOptions opts;
  opts.last_layer = *std::max_element(probe_index.begin(), probe_index.end());
  for (std::size_t requested : scales)
  {
    std::size_t scale = requested;
    if (scale > shorter)
    {
      res.warnings.push_back("scale " + std::to_string(requested) + " exceeds the image's shorter side; clamped to " +
                             std::to_string(shorter));
      scale = shorter;
    }
    const auto [w, h] = thumbnail_dims(image.width, image.height, scale);
    const Tensor x = image_resize_to_tensor(image, h, w);
    std::vector<SweepRow> rows(probes.size());
    opts.observe = [&](std::size_t layer, const Tensor& t) {
      for (std::size_t p = 0; p < probe_index.size(); ++p)
      {
        if (probe_index[p] != layer)
          continue;
        const ChannelStats cs = channel_stats(t, 0.0);
        SweepRow& row = rows[p];
        row.scale = scale;
        row.layer = probes[p];
        for (std::size_t c = 0; c < cs.c; ++c)
        {
          row.mu.push_back(cs.mean[c]);
          row.sigma.push_back(cs.stddev[c]);
          row.mean_abs_mu += std::abs(static_cast<double>(cs.mean[c]));
          row.mean_sigma += cs.stddev[c];
        }
        row.mean_abs_mu /= static_cast<double>(cs.c);
        row.mean_sigma /= static_cast<double>(cs.c);
      }
    };
    StatsBank bank;
    encoder.forward(x, bank, opts);
    for (SweepRow& row : rows)
      res.rows.push_back(std::move(row));
  }
  return res;
}

std::string sweep_to_csv(const SweepResult& sweep)
{
  std::ostringstream os;
  os.precision(9);
  os << "scale,layer,mean_abs_mu,mean_sigma\n";
  for (const SweepRow& r : sweep.rows)
    os << r.scale << ',' << r.layer << ',' << r.mean_abs_mu << ',' << r.mean_sigma << '\n';
  return os.str();
}

SweepConvergence sweep_convergence(const SweepResult& sweep)
{
  SweepConvergence conv;
  for (const SweepRow& r : sweep.rows)
    if (std::find(conv.layers.begin(), conv.layers.end(), r.layer) == conv.layers.end())
      conv.layers.push_back(r.layer);
  const std::size_t L = conv.layers.size();
  if (L == 0)
    return conv;
  for (std::size_t i = 0; i < sweep.rows.size(); i += L)
    conv.scales.push_back(sweep.rows[i].scale);
  const std::size_t last = conv.scales.size() - 1;
  auto row = [&](std::size_t s, std::size_t l) -> const SweepRow& { return sweep.rows[s * L + l]; };
  conv.mu_deviation.assign(L, std::vector<double>(conv.scales.size(), 0.0));
  conv.sigma_deviation.assign(L, std::vector<double>(conv.scales.size(), 0.0));
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t s = 0; s < conv.scales.size(); ++s)
    {
      const SweepRow& a = row(s, l);
      const SweepRow& ref = row(last, l);
      double dm = 0.0, ds = 0.0;
      for (std::size_t c = 0; c < a.mu.size(); ++c)
      {
        dm += std::abs(a.mu[c] - ref.mu[c]);
        ds += std::abs(a.sigma[c] - ref.sigma[c]);
      }
      conv.mu_deviation[l][s] = dm / static_cast<double>(a.mu.size());
      conv.sigma_deviation[l][s] = ds / static_cast<double>(a.mu.size());
    }
  return conv;
}

double SweepConvergence::monotone_fraction() const
{
  std::size_t total = 0, ok = 0;
  auto check = [&](const std::vector<double>& d) {
    ++total;
    for (std::size_t s = 1; s < d.size(); ++s)
      if (d[s] > d[s - 1])
        return;
    ++ok;
  };
  for (std::size_t l = 0; l < layers.size(); ++l)
  {
    check(mu_deviation[l]);
    check(sigma_deviation[l]);
  }
  return total ? static_cast<double>(ok) / static_cast<double>(total) : 1.0;
}

std::vector<double> SweepConvergence::deviation_at(std::size_t scale) const
{
  const auto it = std::find(scales.begin(), scales.end(), scale);
  if (it == scales.end())
    throw ConfigError("scale " + std::to_string(scale) + " not in sweep");
  const auto s = static_cast<std::size_t>(it - scales.begin());
  std::vector<double> d;
  for (std::size_t l = 0; l < layers.size(); ++l)
    d.push_back(mu_deviation[l][s] + sigma_deviation[l][s]);
  return d;
}

} // namespace tinstitch
