#include "tinstitch/weights.hpp"

#include "tinstitch/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace tinstitch {

namespace {

static_assert(sizeof(float) == 4);

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v)
{
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& out, float f)
{
  put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
}

class Reader
{
public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T le()
  {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n)
  {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const
  {
    if (bytes_.size() - pos_ < n)
      throw LoadError(LoadErrorKind::Truncated, "weight container truncated at byte " + std::to_string(pos_));
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

} // namespace

void WeightStore::add(std::string name, StoredTensor tensor)
{
  if (tensors_.count(name))
    throw LoadError(LoadErrorKind::DuplicateName, "duplicate tensor name '" + name + "'");
  if (tensor.values.size() != tensor.numel())
    throw ConfigError("tensor '" + name + "' has " + std::to_string(tensor.values.size()) +
                      " values for its dims");
  if (name.size() > std::numeric_limits<std::uint16_t>::max() || tensor.dims.size() > 255)
    throw ConfigError("tensor '" + name.substr(0, 32) + "' cannot be encoded");
  order_.push_back(name);
  tensors_.emplace(std::move(name), std::move(tensor));
}

const StoredTensor* WeightStore::find(const std::string& name) const
{
  auto it = tensors_.find(name);
  return it == tensors_.end() ? nullptr : &it->second;
}

const StoredTensor& WeightStore::get(const std::string& name) const
{
  if (const StoredTensor* t = find(name))
    return *t;
  throw LoadError(LoadErrorKind::MissingWeight, "weight '" + name + "' not found");
}

std::size_t WeightStore::payload_bytes() const
{
  std::size_t bytes = 0;
  for (const auto& [name, t] : tensors_)
    bytes += t.values.size() * sizeof(float);
  return bytes;
}

std::size_t container_size(const WeightStore& store)
{
  std::size_t size = sizeof(kWeightMagic) + 4;
  for (const auto& name : store.names())
  {
    const StoredTensor& t = store.get(name);
    size += 2 + name.size() + 1 + 1 + 4 * t.dims.size() + 4 * t.numel();
  }
  return size;
}

std::vector<std::uint8_t> encode_weights(const WeightStore& store)
{
  std::vector<std::uint8_t> out;
  out.reserve(container_size(store));
  out.insert(out.end(), std::begin(kWeightMagic), std::end(kWeightMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& name : store.names())
  {
    const StoredTensor& t = store.get(name);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(0);
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims)
      put_le<std::uint32_t>(out, d);
    for (float v : t.values)
      put_f32(out, v);
  }
  return out;
}

WeightStore decode_weights(std::span<const std::uint8_t> bytes)
{
  if (bytes.size() < sizeof(kWeightMagic) || std::memcmp(bytes.data(), kWeightMagic, sizeof(kWeightMagic)) != 0)
    throw LoadError(LoadErrorKind::BadMagic, "not a URSTW1 weight container");
  Reader r(bytes.subspan(sizeof(kWeightMagic)));
  const auto count = r.le<std::uint32_t>();
  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i)
  {
    const auto len = r.le<std::uint16_t>();
    auto raw = r.take(len);
    std::string name(raw.begin(), raw.end());
    const auto dtype = r.le<std::uint8_t>();
    if (dtype != 0)
      throw LoadError(LoadErrorKind::BadDtype,
                      "tensor '" + name + "' has dtype " + std::to_string(dtype) + "; only f32 (0) is supported");
    const auto ndim = r.le<std::uint8_t>();
    StoredTensor t;
    t.dims.resize(ndim);
    for (auto& d : t.dims)
      d = r.le<std::uint32_t>();
    const std::size_t n = t.numel();
    auto payload = r.take(n * 4);
    t.values.resize(n);
    for (std::size_t k = 0; k < n; ++k)
    {
      std::uint32_t u = 0;
      for (std::size_t b = 0; b < 4; ++b)
        u |= static_cast<std::uint32_t>(payload[k * 4 + b]) << (8 * b);
      t.values[k] = std::bit_cast<float>(u);
    }
    store.add(std::move(name), std::move(t));
  }
  if (!r.done())
    throw LoadError(LoadErrorKind::BadFormat, "trailing bytes after the last tensor");
  return store;
}

WeightStore load_weights(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw LoadError(LoadErrorKind::Io, "cannot open weights " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

void save_weights(const WeightStore& store, const std::filesystem::path& path)
{
  const auto bytes = encode_weights(store);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw LoadError(LoadErrorKind::Io, "cannot write weights " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw LoadError(LoadErrorKind::Io, "short write to " + path.string());
}

} // namespace tinstitch
