// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "alloc_tracker.hpp"

namespace patchdelta {
namespace {

std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<bool> g_enabled{true};

}  // namespace

void AllocTracker::on_allocate(std::size_t bytes) noexcept {
  if (!g_enabled.load(std::memory_order_relaxed)) return;
  const std::size_t now = g_current.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

void AllocTracker::on_deallocate(std::size_t bytes) noexcept {
  if (!g_enabled.load(std::memory_order_relaxed)) return;
  // Buffers allocated while tracking was disabled may be freed after it is
  // re-enabled; clamp instead of wrapping.
  std::size_t cur = g_current.load(std::memory_order_relaxed);
  std::size_t next;
  do {
    next = cur > bytes ? cur - bytes : 0;
  } while (!g_current.compare_exchange_weak(cur, next, std::memory_order_relaxed));
}

std::size_t AllocTracker::current_bytes() noexcept { return g_current.load(std::memory_order_relaxed); }
std::size_t AllocTracker::peak_bytes() noexcept { return g_peak.load(std::memory_order_relaxed); }
void AllocTracker::reset_peak() noexcept { g_peak.store(g_current.load(std::memory_order_relaxed), std::memory_order_relaxed); }
bool AllocTracker::enabled() noexcept { return g_enabled.load(std::memory_order_relaxed); }
void AllocTracker::set_enabled(bool on) noexcept { g_enabled.store(on, std::memory_order_relaxed); }

}  // namespace patchdelta
