#include "tinstitch/cli.hpp"

#include "tinstitch/error.hpp"
#include "tinstitch/memory.hpp"
#include "tinstitch/metrics.hpp"
#include "tinstitch/models.hpp"
#include "tinstitch/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace tinstitch {

namespace {

struct StylizeArgs
{
  std::string content, style, out, graph, weights, metrics;
  PipelineConfig cfg;
  bool allow_in = false;
};

struct SweepArgs
{
  std::string content, out, graph, weights;
  std::vector<std::size_t> scales = kDefaultSweepScales;
  std::vector<std::string> probes = kDefaultProbeLayers;
};

struct SeamArgs
{
  std::string content, plan, metrics;
  std::size_t size = 512;
  std::size_t K = 96;
  std::size_t S = 64;
  std::uint64_t seed = 1;
  bool allow_in = false;
};

struct MemArgs
{
  std::string graph, weights;
  PipelineConfig cfg;
  std::vector<std::size_t> sizes;
  std::size_t measure = 0;
};

struct ModelArgs
{
  std::string dir = "models";
  std::size_t width = 8;
};

void add_pipeline_flags(CLI::App* cmd, PipelineConfig& cfg)
{
  cmd->add_option("--patch-size", cfg.K, "Sliding window size K (px)")->capture_default_str();
  cmd->add_option("--stride", cfg.S, "Window stride S (px)")->capture_default_str();
  cmd->add_option("--thumb", cfg.thumb_short_side, "Thumbnail shorter side (px)")->capture_default_str();
  cmd->add_option("--batch", cfg.batch_size, "Patches per network pass")->capture_default_str();
  cmd->add_option("--workers", cfg.workers, "Patch workers (TINSTITCH_THREADS overrides)")->capture_default_str();
}

void apply_thread_override(PipelineConfig& cfg, std::ostream& err)
{
  const char* env = std::getenv("TINSTITCH_THREADS");
  if (!env || !*env)
    return;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1)
  {
    err << "warning: ignoring TINSTITCH_THREADS='" << env << "'\n";
    return;
  }
  cfg.workers = static_cast<std::size_t>(v);
}

void require_file(const std::string& path, const char* what)
{
  if (!std::filesystem::is_regular_file(path))
    throw LoadError(LoadErrorKind::Io, std::string(what) + " '" + path + "' does not exist");
}

Network load_network(const std::string& graph, const std::string& weights)
{
  require_file(graph, "graph file");
  require_file(weights, "weight file");
  return Network::bind(load_graph(graph), load_weights(weights));
}

void write_text(const std::string& path, const std::string& text)
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw LoadError(LoadErrorKind::Io, "cannot write '" + path + "'");
  f << text;
  if (!f)
    throw LoadError(LoadErrorKind::Io, "write to '" + path + "' failed");
}

double mib(std::size_t bytes)
{
  return static_cast<double>(bytes) / (1024.0 * 1024.0);
}

void print_report(std::ostream& out, const MemoryReport& r)
{
  out << std::fixed << std::setprecision(2);
  out << "memory estimate (MiB): thumbnail " << mib(r.thumbnail_bytes) << ", patch " << mib(r.patch_bytes)
      << ", weights " << mib(r.weight_bytes) << ", bank " << mib(r.bank_bytes) << ", total " << mib(r.total_bytes)
      << "\noutput pixels (MiB): band " << mib(r.output_band_bytes) << ", full " << mib(r.output_full_bytes) << "\n";
  out.unsetf(std::ios::floatfield);
}

// relu4_1 of the graph itself when present, else the built-in reference encoder.
FeatureExtractor default_extractor(const Network& net, const WeightStore* weights)
{
  if (weights && net.graph().find_layer("relu4_1"))
    return FeatureExtractor(net.graph(), *weights, "relu4_1");
  const Model enc = make_reference_encoder();
  return FeatureExtractor(enc.graph, enc.weights, "relu4_1");
}

int cmd_stylize(StylizeArgs& a, std::ostream& out, std::ostream& err)
{
  require_file(a.content, "content image");
  require_file(a.style, "style image");
  require_file(a.graph, "graph file");
  require_file(a.weights, "weight file");
  const WeightStore weights = load_weights(a.weights);
  const Network net = Network::bind(load_graph(a.graph), weights);
  a.cfg.allow_plain_norm = a.allow_in;
  a.cfg.retain_thumbnail = !a.metrics.empty();
  apply_thread_override(a.cfg, err);

  const Image content = load_png(a.content);
  const Image style = load_png(a.style);
  StylizeResult res;
  {
    PngRowWriter writer(a.out);
    res = stylize(content, &style, net, a.cfg, writer);
  }
  out << "wrote " << a.out << " (" << content.width << "x" << content.height << ", " << res.plan.size()
      << " patches of " << res.plan.windows.front().w << "x" << res.plan.windows.front().h << ")\n";
  print_report(out, res.estimate);
  out << std::fixed << std::setprecision(2) << "measured tensor peak (MiB): " << mib(res.measured_peak_bytes)
      << "\ntime (s): thumbnail " << res.thumbnail_seconds << ", patches " << res.patch_seconds << "\n";
  out.unsetf(std::ios::floatfield);

  if (!a.metrics.empty())
  {
    const FeatureExtractor fx = default_extractor(net, &weights);
    const Image stylized = load_png(a.out);
    const Tensor full = image_to_tensor(stylized);
    const std::size_t centre = res.plan.size() / 2;
    const Rect& win = res.plan.windows[centre];
    const double ratio = static_cast<double>(std::min(content.width, content.height)) /
                         static_cast<double>(a.cfg.thumb_short_side);
    const Tensor patch = extract_patch(full, win);
    const Tensor target = crop_and_upsample_target(*res.stylized_thumbnail, win, ratio, win.h, win.w);
    const double lsp = stroke_perceptual_loss(patch, target, fx);
    double gram = 0.0;
    if (res.plan.size() >= 2)
    {
      std::vector<Tensor> owned;
      for (const Rect& r : res.plan.ownership)
        owned.push_back(extract_patch(full, r));
      gram = gram_consistency(owned, fx);
    }
    write_text(a.metrics, metrics_json(lsp, gram) + "\n");
    out << "metrics: l_sp " << lsp << ", gram_consistency " << gram << "\n";
  }
  return kExitOk;
}

int cmd_stats_sweep(SweepArgs& a, std::ostream& out, std::ostream& err)
{
  require_file(a.content, "image");
  std::optional<Network> net;
  if (!a.graph.empty() || !a.weights.empty())
  {
    net = load_network(a.graph, a.weights);
  }
  else
  {
    const Model enc = make_reference_encoder();
    net = Network::bind(enc.graph, enc.weights);
  }
  std::sort(a.scales.begin(), a.scales.end());
  const Image image = load_png(a.content);
  const SweepResult sweep = stats_sweep(image, *net, a.scales, a.probes);
  for (const std::string& w : sweep.warnings)
    err << "warning: " << w << "\n";
  const std::string csv = sweep_to_csv(sweep);
  if (a.out.empty())
    out << csv;
  else
    write_text(a.out, csv);

  const SweepConvergence conv = sweep_convergence(sweep);
  out << "convergence: " << std::fixed << std::setprecision(3) << conv.monotone_fraction()
      << " of layer statistics approach the largest scale monotonically\n";
  out.unsetf(std::ios::floatfield);
  if (conv.scales.size() >= 2)
  {
    const auto last = conv.scales.back();
    for (std::size_t l = 0; l < conv.layers.size(); ++l)
    {
      out << "  " << conv.layers[l] << " deviation from " << last << ":";
      for (std::size_t s = 0; s < conv.scales.size(); ++s)
        out << " " << conv.scales[s] << "=" << conv.mu_deviation[l][s] + conv.sigma_deviation[l][s];
      out << "\n";
    }
  }
  return kExitOk;
}

double max_abs_diff(const Tensor& a, const Tensor& b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
  return m;
}

int cmd_seam_check(SeamArgs& a, std::ostream& out, std::ostream& err)
{
  Image image;
  if (!a.content.empty())
  {
    require_file(a.content, "content image");
    image = load_png(a.content);
  }
  else
  {
    if (a.size < 1)
      throw ConfigError("image size must be positive");
    image = make_lit_texture_image(a.size, a.size, a.seed);
  }
  const TilePlan plan = plan_tiles(image.width, image.height, a.K, a.S);
  if (!a.plan.empty())
    write_text(a.plan, plan_to_json(plan) + "\n");

  const Tensor x = image_to_tensor(image);
  const Model probe = make_texture_probe();
  const FeatureExtractor fx(probe.graph, probe.weights);

  struct Outcome
  {
    double diff = 0.0;
    double gram = 0.0;
    double lsp = 0.0;
  };
  auto run = [&](NormVariant v) {
    const Model toy = make_toy_network(7, v);
    const Network net = Network::bind(toy.graph, toy.weights);
    StatsBank bank;
    const Tensor whole = net.forward(x, bank);
    bank.freeze();
    const Tensor tiled = run_tiled(net, bank, x, a.K, a.S);
    Outcome o;
    o.diff = max_abs_diff(whole, tiled);
    o.gram = plan.size() >= 2 ? gram_consistency(run_patches(net, bank, x, plan), fx) : 0.0;
    // The whole-image pass plays the stylized thumbnail at scale ratio 1.
    const Rect& win = plan.windows[plan.size() / 2];
    o.lsp = stroke_perceptual_loss(extract_patch(tiled, win), crop_and_upsample_target(whole, win, 1.0, win.h, win.w),
                                   fx);
    return o;
  };

  const Model toy = make_toy_network();
  const std::size_t r = toy.graph.receptive_field_radius();
  const std::size_t margin = (a.K - a.S) / 2;
  out << "image " << image.width << "x" << image.height << ", K=" << a.K << ", S=" << a.S << ", " << plan.size()
      << " patches, receptive radius " << r << ", margin " << margin << "\n";
  if (r > margin)
    err << "warning: receptive radius " << r << " exceeds the overlap margin " << margin
        << "; tiled output cannot match the whole-image output\n";

  const Outcome tin = run(NormVariant::Tin);
  out << "tin: max abs diff " << tin.diff << ", gram_consistency " << tin.gram << ", l_sp " << tin.lsp << "\n";
  if (!a.metrics.empty())
    write_text(a.metrics, metrics_json(tin.lsp, tin.gram) + "\n");

  if (a.allow_in)
  {
    const Outcome in = run(NormVariant::In);
    out << "in: max abs diff " << in.diff << ", gram_consistency " << in.gram << ", l_sp " << in.lsp << "\n";
    if (tin.gram > 0.0)
      out << "gram ratio in/tin: " << in.gram / tin.gram << "\n";
    err << "warning: plain instance norm computes statistics per patch; the patches above are inconsistent in "
           "style by construction\n";
    return kExitOk;
  }
  if (tin.diff > 1e-4)
  {
    err << "seam check failed: max abs diff " << tin.diff << " > 1e-4\n";
    return kExitCheckFailed;
  }
  out << "seam check passed\n";
  return kExitOk;
}

int cmd_mem_report(MemArgs& a, std::ostream& out, std::ostream& err)
{
  std::optional<Network> net;
  if (!a.graph.empty() || !a.weights.empty())
  {
    net = load_network(a.graph, a.weights);
  }
  else
  {
    const Model toy = make_toy_network();
    net = Network::bind(toy.graph, toy.weights);
  }
  apply_thread_override(a.cfg, err);
  a.cfg.validate();
  if (a.sizes.empty())
    for (std::size_t s = 1000; s <= 10000; s += 1000)
      a.sizes.push_back(s);

  out << "resolution,thumbnail_mib,patch_mib,weights_mib,bank_mib,total_mib,output_band_mib,output_full_mib\n";
  out << std::fixed << std::setprecision(3);
  for (std::size_t s : a.sizes)
  {
    const MemoryReport r = estimate_memory(net->graph(), a.cfg, s, s);
    out << s << "x" << s << "," << mib(r.thumbnail_bytes) << "," << mib(r.patch_bytes) << "," << mib(r.weight_bytes)
        << "," << mib(r.bank_bytes) << "," << mib(r.total_bytes) << "," << mib(r.output_band_bytes) << ","
        << mib(r.output_full_bytes) << "\n";
  }
  if (a.measure > 0)
  {
    if (net->graph().has_variant(NormVariant::Adain))
      throw ConfigError("--measure runs graphs without adain layers only");
    const Image content = make_natural_image(a.measure, a.measure, 1);
    StylizeResult res;
    stylize(content, nullptr, *net, a.cfg, &res);
    out << "measured " << a.measure << "x" << a.measure << ": peak " << mib(res.measured_peak_bytes)
        << " MiB, estimate " << mib(res.estimate.total_bytes) << " MiB\n";
  }
  out.unsetf(std::ios::floatfield);
  return kExitOk;
}

int cmd_make_models(ModelArgs& a, std::ostream& out)
{
  std::filesystem::create_directories(a.dir);
  const std::filesystem::path dir(a.dir);
  auto emit = [&](const std::string& stem, const Model& m) {
    save_graph(m.graph, dir / (stem + ".json"));
    save_weights(m.weights, dir / (stem + ".urstw"));
    out << "wrote " << (dir / (stem + ".json")).string() << " and " << (dir / (stem + ".urstw")).string() << "\n";
  };
  emit("toy_tin", make_toy_network(7, NormVariant::Tin));
  emit("toy_in", make_toy_network(7, NormVariant::In));
  emit("reference_adain", make_reference_adain(11, a.width));
  emit("reference_encoder", make_reference_encoder(11, a.width));
  return kExitOk;
}

} // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Tiled stylization with thumbnail-conditioned normalization", "tinstitch"};
  app.require_subcommand(1);

  StylizeArgs st;
  auto* stylize_cmd = app.add_subcommand("stylize", "Stylize a content image patch by patch");
  stylize_cmd->add_option("--content", st.content, "Content PNG")->required();
  stylize_cmd->add_option("--style", st.style, "Style PNG")->required();
  stylize_cmd->add_option("--out", st.out, "Output PNG")->required();
  stylize_cmd->add_option("--graph", st.graph, "Graph JSON")->required();
  stylize_cmd->add_option("--weights", st.weights, "Weight container")->required();
  add_pipeline_flags(stylize_cmd, st.cfg);
  stylize_cmd->add_option("--alpha", st.cfg.alpha, "Style weight in [0, 1]")->capture_default_str();
  stylize_cmd->add_option("--style-size", st.cfg.style_size, "Style image side (px)")->capture_default_str();
  stylize_cmd->add_option("--metrics", st.metrics, "Write l_sp / gram_consistency JSON here");
  stylize_cmd->add_flag("--allow-in", st.allow_in, "Run plain in/iw layers per patch (inconsistent by design)");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("stats-sweep", "Normalization statistics versus thumbnail scale");
  sweep_cmd->add_option("--content", sw.content, "Input PNG")->required();
  sweep_cmd->add_option("--out", sw.out, "CSV output (stdout when omitted)");
  sweep_cmd->add_option("--graph", sw.graph, "Encoder graph JSON (built-in reference encoder by default)");
  sweep_cmd->add_option("--weights", sw.weights, "Encoder weights");
  sweep_cmd->add_option("--scales", sw.scales, "Shorter-side scales")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--probes", sw.probes, "Probe layer names")->delimiter(',')->capture_default_str();

  SeamArgs sm;
  auto* seam_cmd = app.add_subcommand("seam-check", "Whole-image versus tiled output on the toy network");
  seam_cmd->add_option("--content", sm.content, "Input PNG (generated test image when omitted)");
  seam_cmd->add_option("--size", sm.size, "Generated image side (px)")->capture_default_str();
  seam_cmd->add_option("--seed", sm.seed, "Generated image seed")->capture_default_str();
  seam_cmd->add_option("--patch-size", sm.K, "Window size K")->capture_default_str();
  seam_cmd->add_option("--stride", sm.S, "Stride S")->capture_default_str();
  seam_cmd->add_option("--plan", sm.plan, "Write the tile plan JSON here");
  seam_cmd->add_option("--metrics", sm.metrics, "Write metrics JSON here");
  seam_cmd->add_flag("--allow-in", sm.allow_in, "Also run plain IN per patch and report the gram ratio");

  MemArgs mm;
  auto* mem_cmd = app.add_subcommand("mem-report", "Analytic memory estimate over a grid of resolutions");
  mem_cmd->add_option("--graph", mm.graph, "Graph JSON (toy network by default)");
  mem_cmd->add_option("--weights", mm.weights, "Weight container");
  add_pipeline_flags(mem_cmd, mm.cfg);
  mem_cmd->add_option("--sizes", mm.sizes, "Square content sides (default 1000..10000)")->delimiter(',');
  mem_cmd->add_option("--measure", mm.measure, "Also run an instrumented stylize at this side");

  ModelArgs md;
  auto* models_cmd = app.add_subcommand("make-models", "Write the built-in graphs and seeded weights");
  models_cmd->add_option("--dir", md.dir, "Output directory")->capture_default_str();
  models_cmd->add_option("--width", md.width, "Reference network base width")->capture_default_str();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try
  {
    app.parse(argv);
  }
  catch (const CLI::CallForHelp&)
  {
    out << app.help();
    return kExitOk;
  }
  catch (const CLI::CallForAllHelp&)
  {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  }
  catch (const CLI::ParseError& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try
  {
    if (*stylize_cmd)
      return cmd_stylize(st, out, err);
    if (*sweep_cmd)
      return cmd_stats_sweep(sw, out, err);
    if (*seam_cmd)
      return cmd_seam_check(sm, out, err);
    if (*mem_cmd)
      return cmd_mem_report(mm, out, err);
    if (*models_cmd)
      return cmd_make_models(md, out);
  }
  catch (const PatchNormError& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitHazard;
  }
  catch (const Error& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  catch (const std::filesystem::filesystem_error& e)
  {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

} // namespace tinstitch
