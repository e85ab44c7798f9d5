#include "lockcouple/ghost_monitor.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <set>
#include <unordered_set>

namespace lockcouple {

nlohmann::json Violation::to_json() const {
  nlohmann::json j{{"kind", kind}, {"message", message}, {"nodes", nodes}, {"ranges", ranges}};
  if (event_seq) j["event_seq"] = *event_seq;
  return j;
}

nlohmann::json QuiescentReport::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& v : violations) list.push_back(v.to_json());
  return {{"clean", clean()}, {"violations", list}};
}

GhostMonitor::GhostMonitor(Policy policy, bool trace) : policy_(policy), trace_(trace) {}

void GhostMonitor::violation(Violation v) {
  if (policy_ == Policy::Abort) {
    std::cerr << nlohmann::json{{"monitor_violation", v.to_json()}}.dump() << std::endl;
    std::abort();
  }
  violations_.push_back(std::move(v));
}

NodeGhost* GhostMonitor::find(NodeId id) {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

const NodeGhost* GhostMonitor::find(NodeId id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

bool GhostMonitor::thread_holds(ThreadTag tid, LockId lock) const {
  auto it = held_.find(tid);
  if (it == held_.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(),
                     [lock](const Held& h) { return h.lock == lock; });
}

bool GhostMonitor::holds_ancestor_of(ThreadTag tid, NodeId id) const {
  const NodeGhost* g = find(id);
  while (g) {
    if (thread_holds(tid, g->lock)) return true;
    g = g->parent == kNoNode ? nullptr : find(g->parent);
  }
  return false;
}

void GhostMonitor::set_range(NodeId id, const KeyRange& r, RangeChange::Cause cause) {
  NodeGhost& g = nodes_.at(id);
  if (g.range == r) return;
  if (trace_) {
    std::optional<Key> key;
    if (g.contents) key = g.contents->key;
    range_changes_.push_back({id, key, g.range, r, cause});
  }
  g.range = r;
}

void GhostMonitor::rewire_parent(NodeId old_child, NodeId new_child) {
  NodeGhost& g = nodes_.at(old_child);
  if (g.parent == kNoNode) {
    root_ = new_child;
  } else {
    NodeGhost& p = nodes_.at(g.parent);
    if (p.contents->left == old_child) {
      p.contents->left = new_child;
    } else {
      p.contents->right = new_child;
    }
  }
  nodes_.at(new_child).parent = g.parent;
}

void GhostMonitor::reannotate_subtree(NodeId id, const KeyRange& r) {
  std::vector<std::pair<NodeId, KeyRange>> stack{{id, r}};
  while (!stack.empty()) {
    auto [cur, range] = stack.back();
    stack.pop_back();
    NodeGhost& g = nodes_.at(cur);
    if (g.range == range) continue;  // children keep their ranges too
    if (!range.contains(g.range)) {
      violation({"range-shrink", "splice would shrink a node's range", {cur},
                 {g.range.to_string(), range.to_string()}, std::nullopt});
    }
    set_range(cur, range, RangeChange::Cause::Splice);
    if (g.contents) {
      stack.emplace_back(g.contents->left, range.left_of(g.contents->key));
      stack.emplace_back(g.contents->right, range.right_of(g.contents->key));
    }
  }
}

void GhostMonitor::snapshot(std::string label) {
  if (!trace_) return;
  StructureSnapshot s{std::move(label), {}};
  for (const auto& [id, g] : nodes_) {
    if (g.contents) s.ranges.emplace(g.contents->key, g.range);
  }
  snapshots_.push_back(std::move(s));
}

void GhostMonitor::transfer_or_flag(LockId lock, HolderTag from, HolderTag to, Share amount) {
  try {
    ledger_.transfer(lock, from, to, amount);
  } catch (const LedgerError& e) {
    violation({"ledger", e.what(), {lock}, {}, event_seq_});
  }
}

// --- structure ---------------------------------------------------------------

void GhostMonitor::on_node_created(NodeId id, const KeyRange& range,
                                   std::optional<NodeContents> contents,
                                   std::optional<NodeId> parent) {
  std::lock_guard lk(mu_);
  const ThreadTag tid = this_thread_tag();
  if (nodes_.count(id) || ghost_at_lock_.count(id)) {
    violation({"duplicate-id", "node id registered twice", {id}, {}, std::nullopt});
    return;
  }
  if (parent) {
    const NodeGhost* p = find(*parent);
    if (!p) {
      violation({"unknown-node", "parent not registered", {*parent, id}, {}, std::nullopt});
    } else if (!thread_holds(tid, p->lock)) {
      violation({"lock-not-held", "node created without holding its parent's lock", {*parent, id},
                 {}, std::nullopt});
    }
  } else if (root_ != kNoNode) {
    violation({"duplicate-root", "a root is already registered", {root_, id}, {}, std::nullopt});
    return;
  }
  if (contents && !range.contains(contents->key)) {
    violation({"key-outside-range", "contents key outside node range", {id}, {range.to_string()},
               std::nullopt});
  }
  nodes_.emplace(id, NodeGhost{id, range, contents, parent.value_or(kNoNode), id});
  ghost_at_lock_.emplace(id, id);
  if (!parent) {
    root_ = id;
    root_lock_ = id;
  }
  try {
    ledger_.seed(id, !parent);
  } catch (const LedgerError& e) {
    violation({"ledger", e.what(), {id}, {}, std::nullopt});
  }
}

void GhostMonitor::on_contents_set(NodeId id, const NodeContents& c) {
  std::lock_guard lk(mu_);
  NodeGhost* g = find(id);
  if (!g) {
    violation({"unknown-node", "contents set on unregistered node", {id}, {}, std::nullopt});
    return;
  }
  if (!thread_holds(this_thread_tag(), g->lock)) {
    violation({"lock-not-held", "contents changed without holding the node's lock", {id}, {},
               std::nullopt});
  }
  if (!g->range.contains(c.key)) {
    violation({"key-outside-range", "contents key outside node range", {id},
               {g->range.to_string()}, std::nullopt});
  }
  if (g->contents) {
    if (g->contents->key != c.key || g->contents->left != c.left || g->contents->right != c.right) {
      violation({"structure", "overwrite changed key or children", {id}, {}, std::nullopt});
    }
  } else {
    for (auto [child, expect] : {std::pair{c.left, g->range.left_of(c.key)},
                                 std::pair{c.right, g->range.right_of(c.key)}}) {
      const NodeGhost* ch = find(child);
      if (!ch || ch->parent != id || ch->contents || !(ch->range == expect)) {
        violation({"structure", "new children not registered as fresh leaves under node",
                   {id, child}, {expect.to_string()}, std::nullopt});
      }
    }
  }
  g->contents = c;
}

void GhostMonitor::on_range_widen(NodeId id, const KeyRange& new_range) {
  std::lock_guard lk(mu_);
  NodeGhost* g = find(id);
  if (!g) {
    violation({"unknown-node", "widen on unregistered node", {id}, {}, std::nullopt});
    return;
  }
  if (!new_range.contains(g->range)) {
    violation({"range-shrink", "range update is not a widening", {id},
               {g->range.to_string(), new_range.to_string()}, std::nullopt});
    return;
  }
  if (!holds_ancestor_of(this_thread_tag(), id)) {
    violation({"lock-not-held", "widen without holding the node's lock or an ancestor's", {id},
               {}, std::nullopt});
  }
  set_range(id, new_range, RangeChange::Cause::Widen);
}

void GhostMonitor::on_rotate(NodeId target, NodeId right_child) {
  std::lock_guard lk(mu_);
  const ThreadTag tid = this_thread_tag();
  NodeGhost* t = find(target);
  NodeGhost* c = find(right_child);
  if (!t || !c) {
    violation({"unknown-node", "rotate with unregistered id", {target, right_child}, {},
               std::nullopt});
    return;
  }
  if (!t->contents || !c->contents || t->contents->right != right_child ||
      c->parent != target) {
    violation({"structure", "rotate requires an internal right child of the target",
               {target, right_child}, {}, std::nullopt});
    return;
  }
  if (!thread_holds(tid, t->lock) || !thread_holds(tid, c->lock)) {
    violation({"lock-not-held", "rotate without holding both locks", {target, right_child}, {},
               std::nullopt});
  }

  const KeyRange old_target_range = t->range;
  const NodeId middle = c->contents->left;

  rewire_parent(target, right_child);
  c->contents->left = target;
  t->contents->right = middle;
  t->parent = right_child;
  nodes_.at(middle).parent = target;

  std::swap(t->lock, c->lock);
  ghost_at_lock_[t->lock] = target;
  ghost_at_lock_[c->lock] = right_child;

  if (!old_target_range.contains(c->range)) {
    violation({"range-shrink", "rotated-up node's range would shrink", {right_child},
               {c->range.to_string(), old_target_range.to_string()}, std::nullopt});
  }
  set_range(right_child, old_target_range, RangeChange::Cause::Rotate);
  set_range(target, old_target_range.left_of(c->contents->key), RangeChange::Cause::Rotate);

  // Every other node keeps its range.
  for (auto [id, expect] : {std::pair{t->contents->left, t->range.left_of(t->contents->key)},
                            std::pair{middle, t->range.right_of(t->contents->key)},
                            std::pair{c->contents->right, c->range.right_of(c->contents->key)}}) {
    const NodeGhost* g = find(id);
    if (!g || !(g->range == expect)) {
      violation({"range-drift", "rotation changed a range outside the rotated pair", {id},
                 {expect.to_string()}, std::nullopt});
    }
  }
  snapshot("rotate");
}

void GhostMonitor::on_splice(NodeId target, NodeId left_child, NodeId right_child) {
  std::lock_guard lk(mu_);
  const ThreadTag tid = this_thread_tag();
  NodeGhost* t = find(target);
  NodeGhost* l = find(left_child);
  NodeGhost* r = find(right_child);
  if (!t || !l || !r) {
    violation({"unknown-node", "splice with unregistered id", {target, left_child, right_child},
               {}, std::nullopt});
    return;
  }
  if (!t->contents || t->contents->left != left_child || t->contents->right != right_child ||
      r->contents || l->parent != target) {
    violation({"structure", "splice requires a target with a leaf right child",
               {target, left_child, right_child}, {}, std::nullopt});
    return;
  }
  if (!thread_holds(tid, t->lock) || !thread_holds(tid, l->lock)) {
    violation({"lock-not-held", "splice without holding the target and left-child locks",
               {target, left_child}, {}, std::nullopt});
  }

  const KeyRange target_range = t->range;
  const LockId target_lock = t->lock;
  rewire_parent(target, left_child);
  ghost_at_lock_.erase(l->lock);
  ghost_at_lock_.erase(r->lock);
  l->lock = target_lock;
  ghost_at_lock_[target_lock] = left_child;
  nodes_.erase(target);
  nodes_.erase(right_child);
  reannotate_subtree(left_child, target_range);
  snapshot("splice");
}

// --- locks -------------------------------------------------------------------

void GhostMonitor::on_lock_event(LockEvent e, std::optional<Key> traversing) {
  std::lock_guard lk(mu_);
  e.seq = ++event_seq_;
  auto& held = held_[e.tid];

  if (e.kind == LockEvent::Kind::Release) {
    auto it = std::find_if(held.begin(), held.end(), [&](const Held& h) { return h.lock == e.lock; });
    if (it == held.end()) {
      violation({"release-without-acquire", "released a lock the thread does not hold", {e.lock},
                 {}, e.seq});
      return;
    }
    const bool parent_share = it->holds_parent_share;
    held.erase(it);
    if (ledger_.contains(e.lock)) {
      transfer_or_flag(e.lock, HolderTag::thread(e.tid), HolderTag::self(),
                       ShareLedger::self_share());
      if (parent_share) {
        transfer_or_flag(e.lock, HolderTag::thread(e.tid), HolderTag::parent(),
                         ShareLedger::parent_share());
      }
    }
    // Leaving a node puts its children's parent shares back in its invariant.
    for (auto& h : held) {
      if (h.witness == e.lock && h.holds_parent_share) {
        h.holds_parent_share = false;
        if (ledger_.contains(h.lock)) {
          transfer_or_flag(h.lock, HolderTag::thread(e.tid), HolderTag::parent(),
                           ShareLedger::parent_share());
        }
      }
    }
    return;
  }

  if (thread_holds(e.tid, e.lock)) {
    violation({"double-acquire", "lock acquired twice by one thread", {e.lock}, {}, e.seq});
    return;
  }
  const bool known = ledger_.contains(e.lock);
  if (!known) {
    violation({"unknown-lock", "acquired a lock that is not live", {e.lock}, {}, e.seq});
  }

  bool parent_share = false;
  if (e.parent_witness) {
    const LockId w = *e.parent_witness;
    if (!thread_holds(e.tid, w)) {
      violation({"order", "child lock acquired without holding the parent's lock", {w, e.lock},
                 {}, e.seq});
    }
    auto pw = ghost_at_lock_.find(w);
    auto cw = ghost_at_lock_.find(e.lock);
    if (pw == ghost_at_lock_.end() || cw == ghost_at_lock_.end() ||
        nodes_.at(cw->second).parent != pw->second) {
      violation({"order", "acquired lock is not a child of the witness lock", {w, e.lock}, {},
                 e.seq});
    }
    parent_share = known;
  } else if (e.lock != root_lock_ || !held.empty()) {
    violation({"order", "lock acquired without a parent-edge witness", {e.lock}, {}, e.seq});
  }

  if (known) {
    transfer_or_flag(e.lock, HolderTag::self(), HolderTag::thread(e.tid),
                     ShareLedger::self_share());
    if (parent_share) {
      try {
        ledger_.transfer(e.lock, HolderTag::parent(), HolderTag::thread(e.tid),
                         ShareLedger::parent_share());
      } catch (const LedgerError& err) {
        parent_share = false;
        violation({"ledger", err.what(), {e.lock}, {}, e.seq});
      }
    }
  }
  held.push_back({e.lock, e.parent_witness, parent_share});

  if (in_op_[e.tid] > 0 && held.size() > 2) {
    violation({"held-count", "more than two node locks held inside an operation", {e.lock}, {},
               e.seq});
  }
  if (traversing) {
    auto g = ghost_at_lock_.find(e.lock);
    if (g != ghost_at_lock_.end()) {
      const NodeGhost& node = nodes_.at(g->second);
      if (!node.range.contains(*traversing)) {
        violation({"traversal-range", "target key " + std::to_string(*traversing) +
                                          " outside the current node's range",
                   {node.id}, {node.range.to_string()}, e.seq});
      }
    }
  }
}

void GhostMonitor::on_acquire(LockId lock, std::optional<LockId> parent_witness,
                              std::optional<Key> traversing) {
  on_lock_event({this_thread_tag(), lock, LockEvent::Kind::Acquire, parent_witness, 0},
                traversing);
}

void GhostMonitor::on_release(LockId lock) {
  on_lock_event({this_thread_tag(), lock, LockEvent::Kind::Release, std::nullopt, 0});
}

void GhostMonitor::on_lock_reclaimed(LockId lock) {
  std::lock_guard lk(mu_);
  const ThreadTag tid = this_thread_tag();
  ++event_seq_;
  auto& held = held_[tid];
  auto it = std::find_if(held.begin(), held.end(), [&](const Held& h) { return h.lock == lock; });
  if (it == held.end()) {
    violation({"reclaim", "lock reclaimed without being held", {lock}, {}, event_seq_});
  } else {
    held.erase(it);
  }
  try {
    ledger_.reclaim(lock, HolderTag::thread(tid));
  } catch (const LedgerError& e) {
    violation({"ledger", e.what(), {lock}, {}, event_seq_});
  }
}

void GhostMonitor::on_op_begin() {
  std::lock_guard lk(mu_);
  const ThreadTag tid = this_thread_tag();
  if (!held_[tid].empty()) {
    violation({"held-count", "operation started while holding node locks", {}, {}, event_seq_});
  }
  ++in_op_[tid];
}

void GhostMonitor::on_op_end() {
  std::lock_guard lk(mu_);
  const ThreadTag tid = this_thread_tag();
  if (!held_[tid].empty()) {
    std::vector<NodeId> locks;
    for (const auto& h : held_[tid]) locks.push_back(h.lock);
    violation({"held-count", "operation returned while holding node locks", locks, {},
               event_seq_});
  }
  --in_op_[tid];
}

void GhostMonitor::ledger_transfer(LockId lock, HolderTag from, HolderTag to, Share amount) {
  std::lock_guard lk(mu_);
  transfer_or_flag(lock, from, to, amount);
}

// --- abstract state ------------------------------------------------------------

void GhostMonitor::on_linearization(const Operation& op, const OpResult& result,
                                    std::optional<NodeId> at) {
  std::lock_guard lk(mu_);
  if (at) {
    const NodeGhost* g = find(*at);
    if (!g) {
      violation({"unknown-node", "linearized at unregistered node", {*at}, {}, std::nullopt});
    } else {
      if (!thread_holds(this_thread_tag(), g->lock)) {
        violation({"lock-not-held", "linearization point outside the node's lock", {*at}, {},
                   std::nullopt});
      }
      bool ok = true;
      switch (result.kind) {
        case OpResult::Kind::InsertDone:
          ok = g->contents && g->contents->key == op.key &&
               g->contents->value_digest == op.value.digest();
          break;
        case OpResult::Kind::LookupFound:
          ok = g->contents && g->contents->key == op.key &&
               g->contents->value_digest == result.value.digest();
          break;
        case OpResult::Kind::LookupAbsent:
        case OpResult::Kind::DeleteDone:
          // Absence is witnessed by a leaf whose range holds the key.
          ok = !g->contents && g->range.contains(op.key);
          break;
      }
      if (!ok) {
        violation({"witness", op.to_string() + " -> " + result.to_string() +
                                  " not witnessed by node state",
                   {*at}, {g->range.to_string()}, std::nullopt});
      }
    }
  }

  const std::uint64_t pre = shadow_digest_;
  if (auto old = shadow_.get(op.key); old && op.type != Operation::Type::Lookup) {
    shadow_digest_ -= binding_hash(op.key, *old);
  }
  OpResult expected = shadow_.apply(op);
  if (op.type == Operation::Type::Insert) shadow_digest_ += binding_hash(op.key, op.value);
  if (!(expected == result)) {
    violation({"transition-mismatch",
               op.to_string() + " returned " + result.to_string() + " but the shadow map gives " +
                   expected.to_string(),
               {}, {}, std::nullopt});
  }
  log_.push_back({op, result, pre, shadow_digest_});
}

// --- teardown & inspection -------------------------------------------------------

std::vector<Violation> GhostMonitor::on_map_destroyed(const std::vector<LockId>& locks,
                                                      const std::vector<NodeId>& ghosts) {
  std::lock_guard lk(mu_);
  std::vector<Violation> out;
  for (LockId lock : locks) {
    if (!ledger_.contains(lock)) {
      out.push_back({"leaked-id", "map reports a lock the ledger does not know", {lock}, {},
                     std::nullopt});
      continue;
    }
    try {
      ledger_.assemble_and_reclaim(lock);
    } catch (const LedgerError& e) {
      out.push_back({"ledger-incomplete", e.what(), {lock}, {}, std::nullopt});
    }
  }
  for (LockId lock : ledger_.locks()) {
    out.push_back({"leaked-id", "ledger lock not reported by the map", {lock}, {}, std::nullopt});
  }
  std::unordered_set<NodeId> reported(ghosts.begin(), ghosts.end());
  for (NodeId id : ghosts) {
    if (!nodes_.count(id)) {
      out.push_back({"leaked-id", "map reports an unregistered node", {id}, {}, std::nullopt});
    }
  }
  for (const auto& [id, _] : nodes_) {
    if (!reported.count(id)) {
      out.push_back({"leaked-id", "registered node not reported by the map", {id}, {},
                     std::nullopt});
    }
  }
  nodes_.clear();
  ghost_at_lock_.clear();
  ledger_ = ShareLedger{};
  root_ = kNoNode;
  root_lock_ = 0;
  violations_.insert(violations_.end(), out.begin(), out.end());
  return out;
}

std::optional<AnnotatedTree> GhostMonitor::build_tree(NodeId id,
                                                      std::vector<Violation>* problems) const {
  std::unordered_set<NodeId> seen;
  std::function<std::optional<AnnotatedTree>(NodeId, NodeId)> rec =
      [&](NodeId cur, NodeId parent) -> std::optional<AnnotatedTree> {
    const NodeGhost* g = find(cur);
    if (!g) {
      if (problems) problems->push_back({"structure", "dangling child id", {parent, cur}, {}, {}});
      return std::nullopt;
    }
    if (!seen.insert(cur).second) {
      if (problems) problems->push_back({"structure", "node reachable twice", {cur}, {}, {}});
      return std::nullopt;
    }
    if (g->parent != parent && problems) {
      problems->push_back({"structure", "parent link mismatch", {cur, parent}, {}, {}});
    }
    AnnotatedTree out{g->range, std::nullopt, cur, {}};
    if (g->contents) {
      out.key = g->contents->key;
      auto l = rec(g->contents->left, cur);
      auto r = rec(g->contents->right, cur);
      if (!l || !r) return std::nullopt;
      out.children.push_back(std::move(*l));
      out.children.push_back(std::move(*r));
    }
    return out;
  };
  auto tree = rec(id, kNoNode);
  if (tree && problems && seen.size() != nodes_.size()) {
    std::vector<NodeId> orphans;
    for (const auto& [nid, _] : nodes_) {
      if (!seen.count(nid)) orphans.push_back(nid);
    }
    problems->push_back({"structure", "registered nodes unreachable from the root", orphans, {}, {}});
  }
  return tree;
}

QuiescentReport GhostMonitor::quiescent_check(const LiveView& live) const {
  std::lock_guard lk(mu_);
  QuiescentReport rep;
  auto& out = rep.violations;

  for (const auto& [tid, held] : held_) {
    if (!held.empty()) {
      out.push_back({"held-count", "thread " + std::to_string(tid) + " still holds locks", {}, {},
                     {}});
    }
  }
  for (LockId lock : ledger_.unbalanced()) {
    out.push_back({"ledger", "shares do not sum to 1", {lock}, {}, {}});
  }
  for (LockId lock : ledger_.thread_held()) {
    out.push_back({"ledger", "share owned by a thread at quiescence", {lock}, {}, {}});
  }

  if (root_ != kNoNode) {
    auto tree = build_tree(root_, &out);
    if (tree) {
      // Stored ranges must equal the ranges derived from the root.
      std::vector<std::pair<const AnnotatedTree*, KeyRange>> stack{{&*tree, KeyRange::full()}};
      std::vector<KeyRange> leaves;
      std::vector<std::pair<Key, std::uint64_t>> pairs;
      // In-order walk for leaves/pairs, pre-order stack for ranges.
      while (!stack.empty()) {
        auto [n, expect] = stack.back();
        stack.pop_back();
        if (!(n->range == expect)) {
          out.push_back({"range-drift", "stored range differs from derived range", {n->id},
                         {n->range.to_string(), expect.to_string()}, {}});
        }
        if (!n->is_leaf()) {
          if (!expect.contains(*n->key)) {
            out.push_back({"key-outside-range", "key outside derived range", {n->id},
                           {expect.to_string()}, {}});
            continue;
          }
          stack.emplace_back(&n->right(), expect.right_of(*n->key));
          stack.emplace_back(&n->left(), expect.left_of(*n->key));
        }
      }
      std::function<void(const AnnotatedTree&)> walk = [&](const AnnotatedTree& n) {
        if (n.is_leaf()) {
          leaves.push_back(n.range);
          return;
        }
        walk(n.left());
        pairs.emplace_back(*n.key, nodes_.at(n.id).contents->value_digest);
        walk(n.right());
      };
      walk(*tree);

      // Leaf ranges partition the keys absent from the tree.
      bool partition = !leaves.empty() && leaves.front().lower() == Bound::neg_inf() &&
                       leaves.back().upper() == Bound::pos_inf() &&
                       leaves.size() == pairs.size() + 1;
      for (std::size_t i = 0; partition && i < pairs.size(); ++i) {
        partition = leaves[i].upper() == pairs[i].first && leaves[i + 1].lower() == pairs[i].first;
      }
      if (!partition) {
        out.push_back({"leaf-partition", "leaf ranges do not partition the absent keys", {}, {},
                       {}});
      }

      // Registry implements the shadow map.
      bool implements = pairs.size() == shadow_.size();
      auto it = shadow_.bindings().begin();
      for (std::size_t i = 0; implements && i < pairs.size(); ++i, ++it) {
        implements = pairs[i].first == it->first && pairs[i].second == it->second.digest();
      }
      if (!implements) {
        out.push_back({"shadow-mismatch", "registry tree does not implement the shadow map", {},
                       {}, {}});
      }

      if (live.tree) {
        // Live structure must match the registry node for node.
        std::vector<std::pair<const TreeNode*, const AnnotatedTree*>> st{{live.tree->get(), &*tree}};
        while (!st.empty()) {
          auto [ln, rn] = st.back();
          st.pop_back();
          if ((ln == nullptr) != rn->is_leaf()) {
            out.push_back({"live-mismatch", "live tree shape differs from registry", {rn->id}, {},
                           {}});
            continue;
          }
          if (!ln) continue;
          if (ln->key != *rn->key || ln->id != rn->id ||
              ln->value.digest() != nodes_.at(rn->id).contents->value_digest) {
            out.push_back({"live-mismatch", "live node differs from registry", {rn->id, ln->id},
                           {}, {}});
            continue;
          }
          st.emplace_back(ln->left.get(), &rn->left());
          st.emplace_back(ln->right.get(), &rn->right());
        }
      }
    }
    std::set<NodeId> live_ids(live.ghost_ids.begin(), live.ghost_ids.end());
    std::set<NodeId> reg_ids;
    for (const auto& [id, _] : nodes_) reg_ids.insert(id);
    if (live_ids != reg_ids) {
      out.push_back({"id-set", "registry ids differ from the live node ids", {}, {}, {}});
    }
    std::set<LockId> live_locks(live.lock_ids.begin(), live.lock_ids.end());
    auto ledger_locks = ledger_.locks();
    if (live_locks != std::set<LockId>(ledger_locks.begin(), ledger_locks.end())) {
      out.push_back({"id-set", "ledger locks differ from the live locks", {}, {}, {}});
    }
  }

  if (!(live.contents == shadow_)) {
    out.push_back({"shadow-mismatch", "live contents differ from the shadow map", {}, {}, {}});
  }

  // Replaying the witness order reproduces every logged step.
  AbstractMap replay;
  for (std::size_t i = 0; i < log_.size(); ++i) {
    const auto& rec = log_[i];
    const std::uint64_t pre = replay.additive_digest();
    OpResult r = replay.apply(rec.op);
    if (pre != rec.pre_digest || replay.additive_digest() != rec.post_digest || !(r == rec.result)) {
      out.push_back({"witness-order", "linearization log step " + std::to_string(i) +
                                          " does not replay",
                     {}, {}, {}});
      break;
    }
  }
  return rep;
}

std::vector<Violation> GhostMonitor::violations() const {
  std::lock_guard lk(mu_);
  return violations_;
}

bool GhostMonitor::clean() const {
  std::lock_guard lk(mu_);
  return violations_.empty();
}

AbstractMap GhostMonitor::shadow() const {
  std::lock_guard lk(mu_);
  return shadow_;
}

std::vector<LinearizationRecord> GhostMonitor::log() const {
  std::lock_guard lk(mu_);
  return log_;
}

std::vector<RangeChange> GhostMonitor::range_changes() const {
  std::lock_guard lk(mu_);
  return range_changes_;
}

std::vector<StructureSnapshot> GhostMonitor::snapshots() const {
  std::lock_guard lk(mu_);
  return snapshots_;
}

std::optional<NodeGhost> GhostMonitor::ghost(NodeId id) const {
  std::lock_guard lk(mu_);
  if (const NodeGhost* g = find(id)) return *g;
  return std::nullopt;
}

std::optional<AnnotatedTree> GhostMonitor::registry_tree() const {
  std::lock_guard lk(mu_);
  if (root_ == kNoNode) return std::nullopt;
  return build_tree(root_, nullptr);
}

std::size_t GhostMonitor::registry_size() const {
  std::lock_guard lk(mu_);
  return nodes_.size();
}

std::size_t GhostMonitor::ledger_size() const {
  std::lock_guard lk(mu_);
  return ledger_.size();
}

ShareLedger GhostMonitor::ledger() const {
  std::lock_guard lk(mu_);
  return ledger_;
}

void GhostMonitor::corrupt_range_for_testing(NodeId id, const KeyRange& r) {
  std::lock_guard lk(mu_);
  nodes_.at(id).range = r;
}

}  // namespace lockcouple
