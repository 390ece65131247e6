#pragma once

#include "tinstitch/graph.hpp"
#include "tinstitch/image.hpp"
#include "tinstitch/weights.hpp"

#include <cstdint>

namespace tinstitch {

struct Model
{
  NetworkGraph graph;
  WeightStore weights;
};

// conv3x3(3->8) conv3x3(8->8) | norm | conv3x3(8->8) conv3x3(8->3), each conv
// preceded by a 1-pixel reflect pad, seeded random weights. Receptive radius 4.
Model make_toy_network(std::uint64_t seed = 7, NormVariant variant = NormVariant::Tin);

// VGG-style encoder down to relu4_1 (reflection padding, layer names
// relu1_1 ... relu4_1), an adain layer, and the mirrored decoder with nearest
// upsampling. `width` is the channel count of the first block (VGG uses 64).
Model make_reference_adain(std::uint64_t seed = 11, std::size_t width = 8);

// Encoder half of make_reference_adain, up to and including relu4_1.
Model make_reference_encoder(std::uint64_t seed = 11, std::size_t width = 8);

// Two unpadded 3x3 convolutions with a relu in between. Every kernel is
// orthogonal to constant and linear ramps, so the probe responds to local
// texture and is blind to smooth illumination.
Model make_texture_probe(std::uint64_t seed = 23, std::size_t channels = 8);

// He-normal kernels and small biases for every conv / affine norm in `graph`.
WeightStore synthetic_weights(const NetworkGraph& graph, std::uint64_t seed);

// Procedural test images. All deterministic in (seed, size).
//   natural: multi-octave value noise with a 1/f-like falloff, coloured.
//   lit_texture: stationary fine texture under a strong smooth illumination
//                field, so local statistics vary across the frame.
Image make_natural_image(std::size_t width, std::size_t height, std::uint64_t seed);
Image make_lit_texture_image(std::size_t width, std::size_t height, std::uint64_t seed);
Image make_constant_image(std::size_t width, std::size_t height, std::uint8_t value);

} // namespace tinstitch
