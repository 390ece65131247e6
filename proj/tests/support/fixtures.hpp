#pragma once

#include "tinstitch/graph.hpp"
#include "tinstitch/weights.hpp"

#include <cstdint>

namespace fixture {

// Fully convolutional, norm-free graph whose output has the input's spatial
// size when that size is a multiple of 4. Mixes convs (1/3/5, zero or reflect
// padding, stride 1), relus and pool/upsample pairs.
tinstitch::NetworkGraph random_graph(std::uint64_t seed);

// Unique scratch directory under the system temp dir.
std::string scratch_dir(const std::string& tag);

} // namespace fixture
