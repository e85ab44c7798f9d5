#include "lockcouple/cg_map.hpp"

#include <stdexcept>

namespace lockcouple {

OpResult CgMap::apply(const Operation& op) {
  if (options_.jitter) options_.jitter->pause();
  std::lock_guard lk(mu_);
  if (destroyed_) throw std::logic_error("operation on a destroyed map");
  OpResult r = state_.apply(op);
  if (options_.monitor) options_.monitor->on_linearization(op, r);
  return r;
}

void CgMap::destroy() {
  std::lock_guard lk(mu_);
  if (destroyed_) throw std::logic_error("map destroyed twice");
  destroyed_ = true;
  state_ = AbstractMap{};
}

bool CgMap::destroyed() const {
  std::lock_guard lk(mu_);
  return destroyed_;
}

AbstractMap CgMap::contents() const {
  std::lock_guard lk(mu_);
  if (destroyed_) throw std::logic_error("operation on a destroyed map");
  return state_;
}

}  // namespace lockcouple
