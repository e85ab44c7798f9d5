#pragma once

// Runtime ghost state for a concurrent map: a shadow abstract map advanced at
// linearization points, a registry of per-node ranges and contents, lock-order
// and lock-count checks, and the fractional share ledger.
//
// Ghost node ids follow node contents: a rotation moves ids together with the
// keys they hold, and a splice moves the surviving child's id up into the
// deleted node's cell. Lock ids stay with their cells. A freshly created cell
// uses the same number for its ghost id and its lock id.

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lockcouple/keys.hpp"
#include "lockcouple/op.hpp"
#include "lockcouple/seq_oracle.hpp"
#include "lockcouple/share_ledger.hpp"

namespace lockcouple {

struct NodeContents {
  Key key;
  std::uint64_t value_digest;
  NodeId left;
  NodeId right;

  bool operator==(const NodeContents&) const = default;
};

struct NodeGhost {
  NodeId id = kNoNode;
  KeyRange range = KeyRange::full();
  std::optional<NodeContents> contents;
  NodeId parent = kNoNode;
  LockId lock = 0;
};

struct LockEvent {
  enum class Kind : std::uint8_t { Acquire, Release };

  ThreadTag tid = 0;
  LockId lock = 0;
  Kind kind = Kind::Acquire;
  std::optional<LockId> parent_witness;  // Acquire only
  std::uint64_t seq = 0;                 // assigned by the monitor
};

struct Violation {
  std::string kind;
  std::string message;
  std::vector<NodeId> nodes;
  std::vector<std::string> ranges;
  std::optional<std::uint64_t> event_seq;

  nlohmann::json to_json() const;
};

struct LinearizationRecord {
  Operation op;
  OpResult result;
  std::uint64_t pre_digest;
  std::uint64_t post_digest;
};

struct RangeChange {
  enum class Cause : std::uint8_t { Widen, Rotate, Splice };

  NodeId id;
  std::optional<Key> key;
  KeyRange from;
  KeyRange to;
  Cause cause;
};

/// Key -> range of every internal ghost node, captured after a rotation or splice.
struct StructureSnapshot {
  std::string label;
  std::map<Key, KeyRange> ranges;
};

/// What the map reports about itself at quiescence.
struct LiveView {
  AbstractMap contents;
  // Structural part; absent for maps that are not trees.
  std::optional<AbstractTree> tree;  // TreeNode::id is the ghost id
  std::vector<NodeId> ghost_ids;     // every position, leaves included
  std::vector<LockId> lock_ids;
};

struct QuiescentReport {
  std::vector<Violation> violations;
  bool clean() const { return violations.empty(); }
  nlohmann::json to_json() const;
};

class GhostMonitor {
 public:
  enum class Policy : std::uint8_t {
    Abort,    // print the violation as JSON on stderr and abort
    Collect,  // record and keep going
  };

  explicit GhostMonitor(Policy policy = Policy::Abort, bool trace = false);
  GhostMonitor(const GhostMonitor&) = delete;
  GhostMonitor& operator=(const GhostMonitor&) = delete;

  // --- structure -----------------------------------------------------------
  void on_node_created(NodeId id, const KeyRange& range, std::optional<NodeContents> contents,
                       std::optional<NodeId> parent);
  /// Leaf turned internal, or value overwritten. Caller holds id's lock.
  void on_contents_set(NodeId id, const NodeContents& contents);
  void on_range_widen(NodeId id, const KeyRange& new_range);
  void on_rotate(NodeId target, NodeId right_child);
  /// `target` (whose right child is the leaf `right_child`) is replaced by
  /// `left_child`; target and right_child leave the tree.
  void on_splice(NodeId target, NodeId left_child, NodeId right_child);

  // --- locks ----------------------------------------------------------------
  void on_lock_event(LockEvent e, std::optional<Key> traversing = std::nullopt);
  void on_acquire(LockId lock, std::optional<LockId> parent_witness,
                  std::optional<Key> traversing = std::nullopt);
  void on_release(LockId lock);
  /// Lock freed mid-run while the calling thread holds it with the full share.
  void on_lock_reclaimed(LockId lock);
  void on_op_begin();
  void on_op_end();
  void ledger_transfer(LockId lock, HolderTag from, HolderTag to, Share amount);

  // --- abstract state ---------------------------------------------------------
  /// `at` names the ghost node whose lock witnesses the effect, if any.
  void on_linearization(const Operation& op, const OpResult& result,
                        std::optional<NodeId> at = std::nullopt);

  // --- teardown & inspection (external quiescence) --------------------------
  /// Assembles full shares for every lock in `locks` and drops their ghosts.
  /// Returns violations (ledger-incomplete, leaked ids).
  std::vector<Violation> on_map_destroyed(const std::vector<LockId>& locks,
                                          const std::vector<NodeId>& ghosts);
  QuiescentReport quiescent_check(const LiveView& live) const;

  std::vector<Violation> violations() const;
  bool clean() const;
  AbstractMap shadow() const;
  std::vector<LinearizationRecord> log() const;
  std::vector<RangeChange> range_changes() const;
  std::vector<StructureSnapshot> snapshots() const;
  std::optional<NodeGhost> ghost(NodeId id) const;
  /// The registry rebuilt as a tree, with stored (not derived) ranges.
  std::optional<AnnotatedTree> registry_tree() const;
  std::size_t registry_size() const;
  std::size_t ledger_size() const;
  ShareLedger ledger() const;

  /// Test hook: overwrite a stored range without any checks.
  void corrupt_range_for_testing(NodeId id, const KeyRange& r);

 private:
  struct Held {
    LockId lock;
    std::optional<LockId> witness;
    bool holds_parent_share;
  };

  void violation(Violation v);
  NodeGhost* find(NodeId id);
  const NodeGhost* find(NodeId id) const;
  bool thread_holds(ThreadTag tid, LockId lock) const;
  bool holds_ancestor_of(ThreadTag tid, NodeId id) const;
  void set_range(NodeId id, const KeyRange& r, RangeChange::Cause cause);
  void rewire_parent(NodeId old_child, NodeId new_child);
  void reannotate_subtree(NodeId id, const KeyRange& r);
  void snapshot(std::string label);
  void transfer_or_flag(LockId lock, HolderTag from, HolderTag to, Share amount);
  std::optional<AnnotatedTree> build_tree(NodeId id, std::vector<Violation>* problems) const;

  Policy policy_;
  bool trace_;
  mutable std::mutex mu_;

  std::unordered_map<NodeId, NodeGhost> nodes_;
  std::unordered_map<LockId, NodeId> ghost_at_lock_;
  NodeId root_ = kNoNode;
  LockId root_lock_ = 0;

  ShareLedger ledger_;
  std::unordered_map<ThreadTag, std::vector<Held>> held_;
  std::unordered_map<ThreadTag, int> in_op_;
  std::uint64_t event_seq_ = 0;

  AbstractMap shadow_;
  std::uint64_t shadow_digest_ = 0;
  std::vector<LinearizationRecord> log_;

  std::vector<RangeChange> range_changes_;
  std::vector<StructureSnapshot> snapshots_;
  std::vector<Violation> violations_;
};

}  // namespace lockcouple
