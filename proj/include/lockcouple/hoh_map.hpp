#pragma once

// Concurrent unbalanced BST with one blocking lock per node and hand-over-hand
// (lock-coupling) traversal. Every position in the tree, leaves included, is a
// cell with its own lock; a leaf cell has no body. Deletion pushes the target
// node down with left rotations until its right child is a leaf and then
// splices it out.

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lockcouple/ghost_monitor.hpp"
#include "lockcouple/jitter.hpp"
#include "lockcouple/keys.hpp"
#include "lockcouple/op.hpp"
#include "lockcouple/seq_oracle.hpp"

namespace lockcouple {

/// Deliberate protocol bugs for negative-control runs.
enum class InjectedBug : std::uint8_t {
  None,
  ReleaseBeforeAcquire,  // drop the current lock before taking the child's
};

struct LedgerIncomplete : std::runtime_error {
  explicit LedgerIncomplete(std::vector<Violation> v)
      : std::runtime_error("share ledger could not reclaim every lock"), violations(std::move(v)) {}
  std::vector<Violation> violations;
};

class HohMap {
 public:
  struct Options {
    GhostMonitor* monitor = nullptr;
    const Jitter* jitter = nullptr;
    InjectedBug bug = InjectedBug::None;
  };

  HohMap() : HohMap(Options{}) {}
  explicit HohMap(Options options);
  ~HohMap();

  HohMap(const HohMap&) = delete;
  HohMap& operator=(const HohMap&) = delete;

  OpResult insert(Key k, Value v);
  OpResult lookup(Key k);
  OpResult erase(Key k);
  OpResult apply(const Operation& op);

  /// Requires external quiescence. Throws LedgerIncomplete when an attached
  /// monitor cannot assemble a full share for some lock; memory is released
  /// either way.
  void destroy();
  bool destroyed() const { return root_ == nullptr; }

  // Quiescent inspection.
  AbstractTree snapshot() const;
  AbstractMap contents() const;
  LiveView live_view() const;
  std::size_t cell_count() const;

 private:
  struct Cell;
  struct Body;

  Cell* root() const;
  std::unique_ptr<Cell> make_leaf(const KeyRange& range, std::optional<NodeId> parent_ghost);
  void acquire(Cell& c, Cell* parent, std::optional<Key> traversing);
  void release(Cell& c);
  void reclaim_lock(Cell& c);
  /// Locks the root and descends toward `k`; returns the locked cell that
  /// either holds `k` or is the leaf where `k` belongs.
  Cell* locate(Key k);
  void pushdown_left(Cell* target);
  void turn_left(Cell& target, Cell& right_child);
  void retire(std::unique_ptr<Body> body);
  NodeId fresh_id() { return next_id_.fetch_add(1, std::memory_order_relaxed); }

  Options options_;
  std::unique_ptr<Cell> root_;
  std::atomic<NodeId> next_id_{1};

  // Physical reclamation is deferred to destroy() while a bug is injected, so
  // the broken protocol shows up as violations rather than use-after-free.
  std::mutex graveyard_mu_;
  std::vector<std::unique_ptr<Body>> graveyard_;
};

}  // namespace lockcouple
