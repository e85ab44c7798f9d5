#pragma once

#include <boost/rational.hpp>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lockcouple {

using LockId = std::uint64_t;
using ThreadTag = std::uint32_t;
using Share = boost::rational<std::int64_t>;

/// Small process-unique tag for the calling thread, assigned on first use.
ThreadTag this_thread_tag();

struct HolderTag {
  enum class Kind : std::uint8_t { SelfInvariant, ParentInvariant, RootBox, Thread };

  Kind kind = Kind::SelfInvariant;
  ThreadTag tid = 0;  // Thread only

  static HolderTag self() { return {Kind::SelfInvariant, 0}; }
  static HolderTag parent() { return {Kind::ParentInvariant, 0}; }
  static HolderTag root_box() { return {Kind::RootBox, 0}; }
  static HolderTag thread(ThreadTag t) { return {Kind::Thread, t}; }

  auto operator<=>(const HolderTag&) const = default;
  std::string to_string() const;
};

struct LedgerError : std::runtime_error {
  LedgerError(LockId lock, const std::string& what)
      : std::runtime_error("lock " + std::to_string(lock) + ": " + what), lock(lock) {}
  LockId lock;
};

/// Fractional ownership of every live lock. Each lock starts with its self
/// share in its own invariant and its parent share in the parent node's
/// invariant (or in the root box for the root). Shares move between holders
/// but always sum to exactly 1, and a lock is reclaimable only once a single
/// holder owns all of it.
class ShareLedger {
 public:
  static Share self_share() { return {1, 2}; }
  static Share parent_share() { return {1, 2}; }

  void seed(LockId lock, bool is_root);
  void transfer(LockId lock, HolderTag from, HolderTag to, Share amount);
  Share held(LockId lock, HolderTag holder) const;

  /// Requires `holder` to own the full share; removes the lock.
  void reclaim(LockId lock, HolderTag holder);
  /// Gathers the self and parent/root shares into one holder, then reclaims.
  /// Fails if any thread still owns part of the lock.
  void assemble_and_reclaim(LockId lock);

  bool contains(LockId lock) const { return table_.count(lock) != 0; }
  std::size_t size() const { return table_.size(); }
  std::vector<LockId> locks() const;
  /// Locks whose shares do not sum to 1 (must always be empty).
  std::vector<LockId> unbalanced() const;
  /// Locks with a share currently owned by some thread.
  std::vector<LockId> thread_held() const;

 private:
  using Holdings = std::map<HolderTag, Share>;
  Holdings& entry(LockId lock);
  const Holdings& entry(LockId lock) const;

  std::map<LockId, Holdings> table_;
};

}  // namespace lockcouple
