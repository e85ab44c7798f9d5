#pragma once

#include <chrono>
#include <cstdint>

namespace lockcouple {

/// Seeded random pauses injected before lock acquisitions to widen the set of
/// interleavings a stress run explores. Each worker binds its own stream.
class Jitter {
 public:
  Jitter(std::uint64_t seed, std::chrono::microseconds max_pause = std::chrono::microseconds(100))
      : seed_(seed), max_pause_(max_pause) {}

  /// Seeds the calling thread's stream from (seed, worker).
  void bind_this_thread(std::uint64_t worker) const;
  /// Sleeps for a uniform 0..max_pause on the calling thread's stream.
  void pause() const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::chrono::microseconds max_pause_;
};

}  // namespace lockcouple
