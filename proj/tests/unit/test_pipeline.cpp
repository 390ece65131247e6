#include "oracles.hpp"

#include "tinstitch/error.hpp"
#include "tinstitch/memory.hpp"
#include "tinstitch/models.hpp"
#include "tinstitch/pipeline.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

using namespace tinstitch;

namespace {

int max_byte_diff(const Image& a, const Image& b)
{
  REQUIRE(a.width == b.width);
  REQUIRE(a.height == b.height);
  int d = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i)
    d = std::max(d, std::abs(int(a.rgb[i]) - int(b.rgb[i])));
  return d;
}

PipelineConfig small_config(std::size_t short_side, std::size_t K, std::size_t S)
{
  PipelineConfig cfg;
  cfg.thumb_short_side = short_side;
  cfg.K = K;
  cfg.S = S;
  cfg.style_size = 64;
  return cfg;
}

} // namespace

TEST_CASE("thumbnail dims")
{
  CHECK(thumbnail_dims(4000, 3000, 1024) == std::pair<std::size_t, std::size_t>{1365, 1024});
  CHECK(thumbnail_dims(3000, 4000, 1024) == std::pair<std::size_t, std::size_t>{1024, 1365});
  CHECK(thumbnail_dims(1024, 1024, 1024) == std::pair<std::size_t, std::size_t>{1024, 1024});
  CHECK(thumbnail_dims(512, 256, 1024) == std::pair<std::size_t, std::size_t>{2048, 1024});
}

TEST_CASE("config validation")
{
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.S = cfg.K;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.alpha = 1.5f;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("identity graph passes the image through")
{
  NetworkGraph g;
  g.layers = {LayerSpec::relu()};
  const Network net = Network::bind(g, {});
  const Image img = make_natural_image(150, 110, 3);
  const Image out = stylize(img, nullptr, net, small_config(110, 64, 40));
  CHECK(out.rgb == img.rgb);
}

TEST_CASE("tiled toy network equals the whole-image pass")
{
  const Model toy = make_toy_network();
  const Network net = Network::bind(toy.graph, toy.weights);
  const Image img = make_natural_image(512, 384, 4);

  StylizeResult res;
  const Image tiled = stylize(img, nullptr, net, small_config(384, 200, 160), &res);
  CHECK(res.plan.size() == 9);

  StatsBank bank;
  const Tensor whole = net.forward(image_to_tensor(img), bank);
  CHECK(max_byte_diff(tiled, tensor_to_image(whole)) <= 1);

  bank.freeze();
  const Tensor floats = run_tiled(net, bank, image_to_tensor(img), 200, 160);
  CHECK(oracle::max_abs_diff(floats, whole) < 1e-4);
}

TEST_CASE("adain with alpha zero ignores the style")
{
  const Model m = make_reference_adain(3, 4);
  const Network net = Network::bind(m.graph, m.weights);
  const Image img = make_natural_image(96, 64, 1);
  PipelineConfig cfg = small_config(64, 48, 32);
  cfg.alpha = 0.f;
  const Image s1 = make_natural_image(64, 64, 8);
  const Image s2 = make_lit_texture_image(64, 64, 9);
  CHECK(stylize(img, &s1, net, cfg).rgb == stylize(img, &s2, net, cfg).rgb);

  cfg.alpha = 1.f;
  CHECK(stylize(img, &s1, net, cfg).rgb != stylize(img, &s2, net, cfg).rgb);
  CHECK_THROWS_AS(stylize(img, nullptr, net, cfg), ConfigError);
}

TEST_CASE("plain norm graphs are refused")
{
  const Model in = make_toy_network(7, NormVariant::In);
  const Network net = Network::bind(in.graph, in.weights);
  const Image img = make_natural_image(64, 64, 1);
  CHECK_THROWS_AS(stylize(img, nullptr, net, small_config(64, 40, 32)), PatchNormError);
  PipelineConfig cfg = small_config(64, 40, 32);
  cfg.allow_plain_norm = true;
  CHECK_NOTHROW(stylize(img, nullptr, net, cfg));
}

TEST_CASE("memory estimate")
{
  const Model toy = make_toy_network();
  PipelineConfig cfg;
  const auto a = estimate_memory(toy.graph, cfg, 2000, 2000);
  const auto b = estimate_memory(toy.graph, cfg, 4000, 4000);
  const auto c = estimate_memory(toy.graph, cfg, 8000, 8000);
  CHECK(a.patch_bytes == b.patch_bytes);
  CHECK(b.patch_bytes == c.patch_bytes);
  CHECK(a.total_bytes == c.total_bytes);
  CHECK(c.output_full_bytes == 16 * a.output_full_bytes);

  cfg.batch_size = 2;
  CHECK(estimate_memory(toy.graph, cfg, 2000, 2000).patch_bytes == 2 * a.patch_bytes);

  PipelineConfig small = small_config(256, 200, 160);
  const Network net = Network::bind(toy.graph, toy.weights);
  StylizeResult res;
  stylize(make_natural_image(600, 400, 2), nullptr, net, small, &res);
  const double ratio = double(res.measured_peak_bytes) / double(res.estimate.total_bytes);
  INFO("measured " << res.measured_peak_bytes << " estimate " << res.estimate.total_bytes);
  CHECK(ratio > 0.5);
  CHECK(ratio < 2.0);
}

TEST_CASE("output does not depend on worker count or batch")
{
  const Model toy = make_toy_network();
  const Network net = Network::bind(toy.graph, toy.weights);
  const Image img = make_natural_image(300, 220, 6);
  PipelineConfig cfg = small_config(128, 64, 48);
  const Image one = stylize(img, nullptr, net, cfg);
  cfg.workers = 4;
  CHECK(stylize(img, nullptr, net, cfg).rgb == one.rgb);
  cfg.batch_size = 3;
  CHECK(stylize(img, nullptr, net, cfg).rgb == one.rgb);
  CHECK(stylize(img, nullptr, net, cfg).rgb == one.rgb);
}

TEST_CASE("row sink receives ordered bands")
{
  struct Recorder final : RowSink
  {
    std::size_t next = 0, width = 0, height = 0;
    bool ordered = true, finished = false;
    void begin(std::size_t w, std::size_t h) override
    {
      width = w;
      height = h;
    }
    void write_rows(std::size_t first, std::size_t count, std::span<const std::uint8_t> rows) override
    {
      ordered = ordered && first == next && rows.size() == count * width * 3;
      next = first + count;
    }
    void finish() override { finished = true; }
  } rec;
  NetworkGraph g;
  g.layers = {LayerSpec::relu()};
  const Network net = Network::bind(g, {});
  stylize(make_natural_image(90, 130, 1), nullptr, net, small_config(90, 40, 30), rec);
  CHECK(rec.ordered);
  CHECK(rec.finished);
  CHECK(rec.next == 130);
}

TEST_CASE("stats sweep")
{
  const Model enc = make_reference_encoder(2, 4);
  const Network net = Network::bind(enc.graph, enc.weights);

  SUBCASE("constant image has zero spread")
  {
    const SweepResult r = stats_sweep(make_constant_image(64, 64, 128), net, {32, 64});
    REQUIRE(r.rows.size() == 8);
    for (const auto& row : r.rows)
      CHECK(row.mean_sigma < 1e-5);
  }

  SUBCASE("scales are clamped to the image")
  {
    const SweepResult r = stats_sweep(make_natural_image(96, 80, 1), net, {32, 512}, {"relu1_1"});
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[1].scale == 80);
    CHECK(!r.warnings.empty());
    const std::string csv = sweep_to_csv(r);
    CHECK(csv.rfind("scale,layer,mean_abs_mu,mean_sigma\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }

  SUBCASE("full scale equals instance statistics of the features")
  {
    const Image img = make_natural_image(64, 48, 5);
    const SweepResult r = stats_sweep(img, net, {48}, {"relu2_1"});
    REQUIRE(r.rows.size() == 1);
    ExecOptions opts;
    opts.last_layer = *enc.graph.find_layer("relu2_1");
    StatsBank bank;
    const Tensor f = net.forward(image_to_tensor(img), bank, opts);
    const auto m = oracle::two_pass(oracle::from_tensor(f));
    REQUIRE(r.rows[0].mu.size() == f.c());
    for (std::size_t c = 0; c < f.c(); ++c)
    {
      CHECK(r.rows[0].mu[c] == doctest::Approx(m.mean[c]).epsilon(1e-5));
      CHECK(r.rows[0].sigma[c] == doctest::Approx(std::sqrt(m.var[c])).epsilon(1e-4));
    }
  }

  CHECK_THROWS_AS(stats_sweep(make_natural_image(32, 32, 1), net, {32}, {"nope"}), ConfigError);
}

TEST_CASE("sweep convergence")
{
  SweepResult r;
  for (std::size_t s : {64, 128, 256})
  {
    SweepRow row;
    row.scale = s;
    row.layer = "a";
    row.mu = {1.0 + 64.0 / double(s), 2.0};
    row.sigma = {0.5, 0.5 + 1.0 / double(s)};
    r.rows.push_back(row);
  }
  const SweepConvergence c = sweep_convergence(r);
  REQUIRE(c.layers == std::vector<std::string>{"a"});
  CHECK(c.scales == std::vector<std::size_t>{64, 128, 256});
  CHECK(c.mu_deviation[0][0] == doctest::Approx((1.0 - 0.25) / 2));
  CHECK(c.mu_deviation[0][2] == 0.0);
  CHECK(c.monotone_fraction() == 1.0);
  CHECK(c.deviation_at(256)[0] == 0.0);
}
