#pragma once

// Coarse-grained baseline: the sequential map behind one global lock. Same
// public interface as HohMap; used for differential testing and benchmarks.

#include <mutex>

#include "lockcouple/ghost_monitor.hpp"
#include "lockcouple/jitter.hpp"
#include "lockcouple/op.hpp"
#include "lockcouple/seq_oracle.hpp"

namespace lockcouple {

class CgMap {
 public:
  struct Options {
    GhostMonitor* monitor = nullptr;
    const Jitter* jitter = nullptr;
  };

  CgMap() : CgMap(Options{}) {}
  explicit CgMap(Options options) : options_(options) {}

  CgMap(const CgMap&) = delete;
  CgMap& operator=(const CgMap&) = delete;

  OpResult insert(Key k, Value v) { return apply(Operation::insert(k, std::move(v))); }
  OpResult lookup(Key k) { return apply(Operation::lookup(k)); }
  OpResult erase(Key k) { return apply(Operation::erase(k)); }
  OpResult apply(const Operation& op);

  /// Throws std::logic_error on a second call.
  void destroy();
  bool destroyed() const;

  AbstractMap contents() const;
  LiveView live_view() const { return LiveView{contents(), std::nullopt, {}, {}}; }

 private:
  Options options_;
  mutable std::mutex mu_;
  AbstractMap state_;
  bool destroyed_ = false;
};

}  // namespace lockcouple
