#pragma once

#include "tinstitch/memory.hpp"

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tinstitch {

struct Shape
{
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t numel() const noexcept { return n * c * h * w; }
  std::size_t plane() const noexcept { return h * w; }

  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

// Dense rank-4 float tensor in NCHW order. Storage goes through the tracked
// allocator; reshape() keeps the allocation when capacity allows, which is
// what the executor's ping-pong workspaces rely on.
class Tensor
{
public:
  using Storage = std::vector<float, TrackedAllocator<float>>;

  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.f);
  Tensor(Shape shape, std::initializer_list<float> values);
  Tensor(Shape shape, std::span<const float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t n() const noexcept { return shape_.n; }
  std::size_t c() const noexcept { return shape_.c; }
  std::size_t h() const noexcept { return shape_.h; }
  std::size_t w() const noexcept { return shape_.w; }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float* data() noexcept { return data_.data(); }
  const float* data() const noexcept { return data_.data(); }
  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  float* plane(std::size_t n, std::size_t c) noexcept
  {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }
  const float* plane(std::size_t n, std::size_t c) const noexcept
  {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }

  float& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) noexcept
  {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  float at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const noexcept
  {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  // Changes the logical shape. Contents are unspecified afterwards.
  void reshape(Shape shape);
  void reserve(std::size_t elements) { data_.reserve(elements); }
  std::size_t capacity() const noexcept { return data_.capacity(); }

  void fill(float v);

private:
  Shape shape_{};
  Storage data_;
};

bool all_finite(const Tensor& t);

} // namespace tinstitch
