#include "tinstitch/memory.hpp"

namespace tinstitch {

std::atomic<std::size_t> MemoryTracker::live_{0};
std::atomic<std::size_t> MemoryTracker::peak_{0};

void MemoryTracker::on_allocate(std::size_t bytes) noexcept
{
  const std::size_t now = live_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  std::size_t peak = peak_.load(std::memory_order_relaxed);
  while (now > peak && !peak_.compare_exchange_weak(peak, now, std::memory_order_relaxed))
  {
  }
}

void MemoryTracker::on_deallocate(std::size_t bytes) noexcept
{
  live_.fetch_sub(bytes, std::memory_order_relaxed);
}

std::size_t MemoryTracker::live_bytes() noexcept
{
  return live_.load(std::memory_order_relaxed);
}

std::size_t MemoryTracker::peak_bytes() noexcept
{
  return peak_.load(std::memory_order_relaxed);
}

std::size_t MemoryTracker::reset_peak() noexcept
{
  const std::size_t now = live_.load(std::memory_order_relaxed);
  peak_.store(now, std::memory_order_relaxed);
  return now;
}

} // namespace tinstitch
