#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tinstitch {

struct StoredTensor
{
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t numel() const noexcept
  {
    std::size_t n = 1;
    for (auto d : dims)
      n *= d;
    return n;
  }
};

// Named f32 tensors in insertion order.
//
// Container layout (little endian):
//   "URSTW1"            6 bytes
//   count               u32
//   per tensor:
//     name_len          u16, then name_len bytes of UTF-8
//     dtype             u8 (0 = f32)
//     ndim              u8, then ndim x u32 dims
//     payload           prod(dims) x f32
class WeightStore
{
public:
  void add(std::string name, StoredTensor tensor);
  const StoredTensor* find(const std::string& name) const;
  // Throws LoadError(MissingWeight).
  const StoredTensor& get(const std::string& name) const;

  std::size_t size() const noexcept { return order_.size(); }
  const std::vector<std::string>& names() const noexcept { return order_; }
  std::size_t payload_bytes() const;

private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, StoredTensor> tensors_;
};

inline constexpr char kWeightMagic[6] = {'U', 'R', 'S', 'T', 'W', '1'};

std::vector<std::uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(std::span<const std::uint8_t> bytes);

WeightStore load_weights(const std::filesystem::path& path);
void save_weights(const WeightStore& store, const std::filesystem::path& path);

// Exact byte size of the encoded container.
std::size_t container_size(const WeightStore& store);

} // namespace tinstitch
