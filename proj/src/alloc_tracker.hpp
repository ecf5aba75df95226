// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Counting allocation layer for matrix buffers. Every Matrix routes its
// storage through TrackedAllocator, so the tracker sees the live and peak
// byte counts of all numeric buffers in the process. The bench module uses
// the peak as the host-side analog of accelerator memory.

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <new>

namespace patchdelta {

class AllocTracker {
 public:
  static void on_allocate(std::size_t bytes) noexcept;
  static void on_deallocate(std::size_t bytes) noexcept;

  static std::size_t current_bytes() noexcept;
  static std::size_t peak_bytes() noexcept;
  // Resets the peak to the current live byte count.
  static void reset_peak() noexcept;

  static bool enabled() noexcept;
  static void set_enabled(bool on) noexcept;
};

// Measures the transient peak above the live byte count at construction.
class PeakScope {
 public:
  PeakScope() noexcept : baseline_(AllocTracker::current_bytes()) { AllocTracker::reset_peak(); }
  std::size_t transient_peak() const noexcept {
    const std::size_t peak = AllocTracker::peak_bytes();
    return peak > baseline_ ? peak - baseline_ : 0;
  }

 private:
  std::size_t baseline_;
};

template <class T>
struct TrackedAllocator {
  using value_type = T;

  TrackedAllocator() noexcept = default;
  template <class U>
  constexpr TrackedAllocator(const TrackedAllocator<U>&) noexcept {}

  [[nodiscard]] T* allocate(std::size_t n) {
    if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) throw std::bad_array_new_length();
    auto* p = static_cast<T*>(std::malloc(n * sizeof(T)));
    if (p == nullptr) throw std::bad_alloc();
    AllocTracker::on_allocate(n * sizeof(T));
    return p;
  }

  void deallocate(T* p, std::size_t n) noexcept {
    AllocTracker::on_deallocate(n * sizeof(T));
    std::free(p);
  }

  template <class U>
  bool operator==(const TrackedAllocator<U>&) const noexcept { return true; }
};

}  // namespace patchdelta
