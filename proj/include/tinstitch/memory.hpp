#pragma once

#include <atomic>
#include <cstddef>
#include <new>

namespace tinstitch {

// Process-wide accounting of tensor storage. Every Tensor allocates through
// TrackedAllocator, so live/peak bytes here are the engine's working set.
class MemoryTracker
{
public:
  static void on_allocate(std::size_t bytes) noexcept;
  static void on_deallocate(std::size_t bytes) noexcept;

  static std::size_t live_bytes() noexcept;
  static std::size_t peak_bytes() noexcept;

  // Resets the peak to the current live value and returns it.
  static std::size_t reset_peak() noexcept;

private:
  static std::atomic<std::size_t> live_;
  static std::atomic<std::size_t> peak_;
};

// Measures the transient peak above the live level at construction.
class PeakScope
{
public:
  PeakScope() noexcept : baseline_(MemoryTracker::reset_peak()) {}

  std::size_t baseline() const noexcept { return baseline_; }
  std::size_t transient_peak() const noexcept
  {
    const std::size_t peak = MemoryTracker::peak_bytes();
    return peak > baseline_ ? peak - baseline_ : 0;
  }

private:
  std::size_t baseline_;
};

template <typename T>
struct TrackedAllocator
{
  using value_type = T;

  TrackedAllocator() noexcept = default;
  template <typename U>
  TrackedAllocator(const TrackedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n)
  {
    T* p = static_cast<T*>(::operator new(n * sizeof(T)));
    MemoryTracker::on_allocate(n * sizeof(T));
    return p;
  }

  void deallocate(T* p, std::size_t n) noexcept
  {
    MemoryTracker::on_deallocate(n * sizeof(T));
    ::operator delete(p);
  }

  template <typename U>
  bool operator==(const TrackedAllocator<U>&) const noexcept { return true; }
};

} // namespace tinstitch
