#pragma once

#include <cstddef>
#include <string>

namespace tinstitch {

// Axis-aligned pixel rectangle, half-open: [x, x + w) x [y, y + h).
struct Rect
{
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  std::size_t area() const noexcept { return w * h; }
  std::size_t right() const noexcept { return x + w; }
  std::size_t bottom() const noexcept { return y + h; }

  bool contains(const Rect& o) const noexcept
  {
    return o.x >= x && o.y >= y && o.right() <= right() && o.bottom() <= bottom();
  }
  bool intersects(const Rect& o) const noexcept
  {
    return o.x < right() && x < o.right() && o.y < bottom() && y < o.bottom();
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline std::string to_string(const Rect& r)
{
  return "(" + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
         std::to_string(r.h) + ")";
}

} // namespace tinstitch
