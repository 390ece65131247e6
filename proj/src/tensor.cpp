#include "tinstitch/tensor.hpp"

#include "tinstitch/error.hpp"

#include <algorithm>
#include <cmath>

namespace tinstitch {

std::string to_string(const Shape& s)
{
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

Tensor::Tensor(Shape shape, float fill)
  : shape_(shape), data_(shape.numel(), fill)
{
}

Tensor::Tensor(Shape shape, std::initializer_list<float> values)
  : Tensor(shape, std::span<const float>(values.begin(), values.size()))
{
}

Tensor::Tensor(Shape shape, std::span<const float> values)
  : shape_(shape)
{
  if (values.size() != shape.numel())
    throw ShapeError("tensor " + to_string(shape) + " needs " + std::to_string(shape.numel()) +
                     " values, got " + std::to_string(values.size()));
  data_.assign(values.begin(), values.end());
}

void Tensor::reshape(Shape shape)
{
  shape_ = shape;
  data_.resize(shape.numel());
}

void Tensor::fill(float v)
{
  std::fill(data_.begin(), data_.end(), v);
}

bool all_finite(const Tensor& t)
{
  return std::all_of(t.values().begin(), t.values().end(), [](float v) { return std::isfinite(v); });
}

} // namespace tinstitch
