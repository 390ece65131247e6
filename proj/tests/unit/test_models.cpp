#include "oracles.hpp"

#include "tinstitch/models.hpp"
#include "tinstitch/network.hpp"
#include "tinstitch/weights.hpp"

#include <doctest.h>

#include <cmath>

using namespace tinstitch;

TEST_CASE("built-in graphs bind and validate")
{
  for (const Model& m : {make_toy_network(), make_toy_network(7, NormVariant::In), make_reference_adain(),
                         make_reference_encoder(), make_texture_probe()})
  {
    CHECK_NOTHROW(m.graph.validate());
    CHECK_NOTHROW(Network::bind(m.graph, m.weights));
  }
  CHECK(make_toy_network().graph.receptive_field_radius() == 4);
}

TEST_CASE("seeded weights are reproducible")
{
  CHECK(encode_weights(make_reference_adain(5).weights) == encode_weights(make_reference_adain(5).weights));
  CHECK(encode_weights(make_reference_adain(5).weights) != encode_weights(make_reference_adain(6).weights));

  const Model adain = make_reference_adain(5);
  const Model enc = make_reference_encoder(5);
  for (const auto& name : enc.weights.names())
    CHECK(adain.weights.get(name).values == enc.weights.get(name).values);
}

TEST_CASE("texture probe kernels ignore constants and ramps")
{
  const Model p = make_texture_probe();
  const Network net = Network::bind(p.graph, p.weights);
  Tensor ramp({1, 3, 12, 12});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 12; ++y)
      for (std::size_t x = 0; x < 12; ++x)
        ramp.at(0, c, y, x) = 0.3f + 0.02f * float(x) - 0.01f * float(y) + 0.1f * float(c);
  StatsBank bank;
  const Tensor f = net.forward(ramp, bank);
  for (float v : f.values())
    CHECK(std::abs(v) < 1e-5f);
}

TEST_CASE("procedural images")
{
  const Image a = make_natural_image(64, 48, 1);
  CHECK(a.width == 64);
  CHECK(a.height == 48);
  CHECK(a.rgb == make_natural_image(64, 48, 1).rgb);
  CHECK(a.rgb != make_natural_image(64, 48, 2).rgb);
  CHECK(make_lit_texture_image(40, 30, 3).rgb == make_lit_texture_image(40, 30, 3).rgb);
  const Image c = make_constant_image(4, 4, 77);
  for (auto v : c.rgb)
    CHECK(v == 77);
}
