#include "lockcouple/hoh_map.hpp"

#include <functional>

namespace lockcouple {

struct HohMap::Cell {
  explicit Cell(LockId id) : lock_id(id), ghost(id) {}

  std::mutex mu;
  const LockId lock_id;
  // Guarded by mu. The ghost id moves with the body on rotation and splice.
  NodeId ghost;
  std::unique_ptr<Body> body;  // null for a leaf
};

struct HohMap::Body {
  Key key;
  Value value;
  std::unique_ptr<Cell> left;
  std::unique_ptr<Cell> right;
};

HohMap::HohMap(Options options) : options_(options) {
  root_ = make_leaf(KeyRange::full(), std::nullopt);
}

HohMap::~HohMap() {
  if (root_) {
    try {
      destroy();
    } catch (...) {
      // Ledger failures were already recorded by the monitor.
    }
  }
}

HohMap::Cell* HohMap::root() const {
  if (!root_) throw std::logic_error("operation on a destroyed map");
  return root_.get();
}

std::unique_ptr<HohMap::Cell> HohMap::make_leaf(const KeyRange& range,
                                                std::optional<NodeId> parent_ghost) {
  auto cell = std::make_unique<Cell>(fresh_id());
  if (options_.monitor) {
    options_.monitor->on_node_created(cell->ghost, range, std::nullopt, parent_ghost);
  }
  return cell;
}

void HohMap::acquire(Cell& c, Cell* parent, std::optional<Key> traversing) {
  if (options_.jitter) options_.jitter->pause();
  c.mu.lock();
  if (options_.monitor) {
    std::optional<LockId> witness;
    if (parent) witness = parent->lock_id;
    options_.monitor->on_acquire(c.lock_id, witness, traversing);
  }
}

void HohMap::release(Cell& c) {
  if (options_.monitor) options_.monitor->on_release(c.lock_id);
  c.mu.unlock();
}

void HohMap::reclaim_lock(Cell& c) {
  if (options_.monitor) options_.monitor->on_lock_reclaimed(c.lock_id);
  c.mu.unlock();
}

HohMap::Cell* HohMap::locate(Key k) {
  Cell* cur = root();
  acquire(*cur, nullptr, k);
  while (Body* b = cur->body.get()) {
    if (k == b->key) return cur;
    Cell* next = k < b->key ? b->left.get() : b->right.get();
    if (options_.bug == InjectedBug::ReleaseBeforeAcquire) {
      release(*cur);
      acquire(*next, cur, k);
    } else {
      acquire(*next, cur, k);
      release(*cur);
    }
    cur = next;
  }
  return cur;
}

OpResult HohMap::insert(Key k, Value v) {
  GhostMonitor* mon = options_.monitor;
  if (mon) mon->on_op_begin();
  Cell* cur = locate(k);
  std::optional<Operation> op;
  if (mon) op = Operation::insert(k, v);
  if (!cur->body) {
    std::optional<KeyRange> range;
    if (mon) {
      if (auto g = mon->ghost(cur->ghost)) range = g->range;
    }
    auto left = make_leaf(range ? range->left_of(k) : KeyRange::full(), cur->ghost);
    auto right = make_leaf(range ? range->right_of(k) : KeyRange::full(), cur->ghost);
    const NodeId lg = left->ghost;
    const NodeId rg = right->ghost;
    cur->body = std::make_unique<Body>(Body{k, std::move(v), std::move(left), std::move(right)});
    if (mon) mon->on_contents_set(cur->ghost, {k, cur->body->value.digest(), lg, rg});
  } else {
    cur->body->value = std::move(v);
    if (mon) {
      const Body& b = *cur->body;
      mon->on_contents_set(cur->ghost, {k, b.value.digest(), b.left->ghost, b.right->ghost});
    }
  }
  if (mon) mon->on_linearization(*op, OpResult::insert_done(), cur->ghost);
  release(*cur);
  if (mon) mon->on_op_end();
  return OpResult::insert_done();
}

OpResult HohMap::lookup(Key k) {
  GhostMonitor* mon = options_.monitor;
  if (mon) mon->on_op_begin();
  Cell* cur = locate(k);
  OpResult result = cur->body ? OpResult::found(cur->body->value) : OpResult::absent();
  if (mon) mon->on_linearization(Operation::lookup(k), result, cur->ghost);
  release(*cur);
  if (mon) mon->on_op_end();
  return result;
}

OpResult HohMap::erase(Key k) {
  GhostMonitor* mon = options_.monitor;
  if (mon) mon->on_op_begin();
  Cell* cur = locate(k);
  if (!cur->body) {
    if (mon) mon->on_linearization(Operation::erase(k), OpResult::delete_done(), cur->ghost);
    release(*cur);
  } else {
    pushdown_left(cur);
  }
  if (mon) mon->on_op_end();
  return OpResult::delete_done();
}

OpResult HohMap::apply(const Operation& op) {
  switch (op.type) {
    case Operation::Type::Insert:
      return insert(op.key, op.value);
    case Operation::Type::Lookup:
      return lookup(op.key);
    case Operation::Type::Delete:
      return erase(op.key);
  }
  throw std::logic_error("unknown operation type");
}

// Holds target's lock on entry; target's body holds the key being deleted.
// At the top of each iteration the thread holds exactly the lock of the cell
// containing that key. Returns with no locks held.
void HohMap::pushdown_left(Cell* target) {
  const Key k = target->body->key;
  for (;;) {
    Body* p = target->body.get();
    Cell* rc = p->right.get();
    acquire(*rc, target, std::nullopt);
    if (rc->body) {
      turn_left(*target, *rc);
      // target now holds the rotated-up node; the key moved down into rc.
      release(*target);
      target = rc;
      continue;
    }

    // Right child is a leaf: free it, then lift the left child into target.
    reclaim_lock(*rc);
    Cell* lc = p->left.get();
    acquire(*lc, target, std::nullopt);
    const NodeId target_ghost = target->ghost;
    const NodeId lc_ghost = lc->ghost;
    const NodeId rc_ghost = rc->ghost;
    std::unique_ptr<Body> removed = std::move(target->body);
    target->body = std::move(lc->body);
    target->ghost = lc_ghost;
    if (GhostMonitor* mon = options_.monitor) {
      mon->on_splice(target_ghost, lc_ghost, rc_ghost);
      mon->on_linearization(Operation::erase(k), OpResult::delete_done());
    }
    reclaim_lock(*lc);
    retire(std::move(removed));  // owns the lc and rc cells
    release(*target);
    return;
  }
}

void HohMap::turn_left(Cell& target, Cell& right_child) {
  std::unique_ptr<Body> down = std::move(target.body);
  std::unique_ptr<Body> up = std::move(right_child.body);
  std::unique_ptr<Cell> rc_owner = std::move(down->right);
  down->right = std::move(up->left);
  right_child.body = std::move(down);
  up->left = std::move(rc_owner);
  target.body = std::move(up);
  std::swap(target.ghost, right_child.ghost);
  if (options_.monitor) options_.monitor->on_rotate(right_child.ghost, target.ghost);
}

void HohMap::retire(std::unique_ptr<Body> body) {
  if (options_.bug == InjectedBug::None) return;  // freed here, including both cells
  std::lock_guard lk(graveyard_mu_);
  graveyard_.push_back(std::move(body));
}

void HohMap::destroy() {
  if (!root_) throw std::logic_error("map destroyed twice");
  std::vector<Violation> problems;
  if (options_.monitor) {
    std::vector<LockId> locks;
    std::vector<NodeId> ghosts;
    std::vector<const Cell*> stack{root_.get()};
    while (!stack.empty()) {
      const Cell* c = stack.back();
      stack.pop_back();
      locks.push_back(c->lock_id);
      ghosts.push_back(c->ghost);
      if (c->body) {
        stack.push_back(c->body->left.get());
        stack.push_back(c->body->right.get());
      }
    }
    problems = options_.monitor->on_map_destroyed(locks, ghosts);
  }
  // Iterative teardown; degenerate trees can be arbitrarily deep.
  std::vector<std::unique_ptr<Cell>> cells;
  cells.push_back(std::move(root_));
  while (!cells.empty()) {
    std::unique_ptr<Cell> c = std::move(cells.back());
    cells.pop_back();
    if (c->body) {
      cells.push_back(std::move(c->body->left));
      cells.push_back(std::move(c->body->right));
    }
  }
  {
    std::lock_guard lk(graveyard_mu_);
    graveyard_.clear();
  }
  if (!problems.empty()) throw LedgerIncomplete(std::move(problems));
}

AbstractTree HohMap::snapshot() const {
  std::function<AbstractTree(const Cell&)> rec = [&](const Cell& c) -> AbstractTree {
    if (!c.body) return nullptr;
    return node(c.body->key, c.body->value, rec(*c.body->left), rec(*c.body->right), c.ghost);
  };
  return rec(*root());
}

AbstractMap HohMap::contents() const {
  AbstractMap::Storage out;
  std::vector<const Cell*> stack{root()};
  while (!stack.empty()) {
    const Cell* c = stack.back();
    stack.pop_back();
    if (!c->body) continue;
    out.emplace(c->body->key, c->body->value);
    stack.push_back(c->body->left.get());
    stack.push_back(c->body->right.get());
  }
  return AbstractMap(std::move(out));
}

LiveView HohMap::live_view() const {
  LiveView view{contents(), snapshot(), {}, {}};
  std::vector<const Cell*> stack{root()};
  while (!stack.empty()) {
    const Cell* c = stack.back();
    stack.pop_back();
    view.ghost_ids.push_back(c->ghost);
    view.lock_ids.push_back(c->lock_id);
    if (c->body) {
      stack.push_back(c->body->left.get());
      stack.push_back(c->body->right.get());
    }
  }
  return view;
}

std::size_t HohMap::cell_count() const {
  std::size_t n = 0;
  std::vector<const Cell*> stack{root()};
  while (!stack.empty()) {
    const Cell* c = stack.back();
    stack.pop_back();
    ++n;
    if (c->body) {
      stack.push_back(c->body->left.get());
      stack.push_back(c->body->right.get());
    }
  }
  return n;
}

}  // namespace lockcouple
