#include "lockcouple/jitter.hpp"

#include <optional>
#include <random>
#include <thread>

#include "lockcouple/share_ledger.hpp"

namespace lockcouple {

namespace {

struct Stream {
  const Jitter* owner = nullptr;
  std::mt19937_64 rng;
};

thread_local Stream t_stream;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::mt19937_64 g(seq);
  return g();
}

}  // namespace

void Jitter::bind_this_thread(std::uint64_t worker) const {
  t_stream.owner = this;
  t_stream.rng.seed(mix(seed_, worker));
}

void Jitter::pause() const {
  if (t_stream.owner != this) bind_this_thread(0x10000ULL + this_thread_tag());
  std::uniform_int_distribution<std::int64_t> dist(0, max_pause_.count());
  const auto us = dist(t_stream.rng);
  if (us == 0) {
    std::this_thread::yield();
  } else {
    std::this_thread::sleep_for(std::chrono::microseconds(us));
  }
}

}  // namespace lockcouple
