#include "lockcouple/seq_oracle.hpp"

#include <algorithm>

namespace lockcouple {

std::optional<Value> AbstractMap::get(Key k) const {
  auto it = bindings_.find(k);
  if (it == bindings_.end()) return std::nullopt;
  return it->second;
}

OpResult AbstractMap::apply(const Operation& op) {
  switch (op.type) {
    case Operation::Type::Insert:
      bindings_.insert_or_assign(op.key, op.value);
      return OpResult::insert_done();
    case Operation::Type::Lookup: {
      auto it = bindings_.find(op.key);
      if (it == bindings_.end()) return OpResult::absent();
      return OpResult::found(it->second);
    }
    case Operation::Type::Delete:
      bindings_.erase(op.key);
      return OpResult::delete_done();
  }
  throw std::logic_error("unknown operation type");
}

std::string AbstractMap::canonical() const {
  std::string out;
  auto put_u64 = [&out](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
  };
  for (const auto& [k, v] : bindings_) {
    put_u64(static_cast<std::uint64_t>(k));
    put_u64(v.size());
    out.append(reinterpret_cast<const char*>(v.bytes().data()), v.size());
  }
  return out;
}

std::uint64_t AbstractMap::digest() const { return fnv1a(canonical()); }

std::uint64_t binding_hash(Key k, const Value& v) {
  std::string buf(8, '\0');
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>(static_cast<std::uint64_t>(k) >> (8 * i));
  buf.append(reinterpret_cast<const char*>(v.bytes().data()), v.size());
  return fnv1a(buf);
}

std::uint64_t AbstractMap::additive_digest() const {
  std::uint64_t sum = 0;
  for (const auto& [k, v] : bindings_) sum += binding_hash(k, v);
  return sum;
}

AbstractMap seq_insert(const AbstractMap& m, Key k, const Value& v) {
  AbstractMap out = m;
  out.apply(Operation::insert(k, v));
  return out;
}

std::optional<Value> seq_lookup(const AbstractMap& m, Key k) { return m.get(k); }

AbstractMap seq_delete(const AbstractMap& m, Key k) {
  AbstractMap out = m;
  out.apply(Operation::erase(k));
  return out;
}

AbstractMap seq_fold(const std::vector<Operation>& ops) {
  AbstractMap m;
  for (const auto& op : ops) m.apply(op);
  return m;
}

AbstractTree node(Key k, Value v, AbstractTree left, AbstractTree right, NodeId id) {
  return std::make_shared<const TreeNode>(
      TreeNode{k, std::move(v), std::move(left), std::move(right), id});
}

namespace {

AbstractTree insert_into(const AbstractTree& t, Key k, const Value& v, NodeId id) {
  if (!t) return node(k, v, nullptr, nullptr, id);
  if (k < t->key) return node(t->key, t->value, insert_into(t->left, k, v, id), t->right, t->id);
  if (t->key < k) return node(t->key, t->value, t->left, insert_into(t->right, k, v, id), t->id);
  return node(k, v, t->left, t->right, t->id);
}

bool sorted_within(const AbstractTree& t, const Bound& lo, const Bound& hi) {
  if (!t) return true;
  if (!(lo < t->key && hi > t->key)) return false;
  return sorted_within(t->left, lo, Bound::finite(t->key)) &&
         sorted_within(t->right, Bound::finite(t->key), hi);
}

void collect(const AbstractTree& t, std::vector<std::pair<Key, Value>>& out) {
  if (!t) return;
  collect(t->left, out);
  out.emplace_back(t->key, t->value);
  collect(t->right, out);
}

void collect_leaves(const AnnotatedTree& a, std::vector<KeyRange>& out) {
  if (a.is_leaf()) {
    out.push_back(a.range);
    return;
  }
  collect_leaves(a.left(), out);
  collect_leaves(a.right(), out);
}

}  // namespace

AbstractTree tree_from_insertions(const std::vector<Key>& keys,
                                  const std::function<Value(Key)>& value_of) {
  AbstractTree t;
  NodeId next = 1;
  for (Key k : keys) t = insert_into(t, k, value_of(k), next++);
  return t;
}

bool is_sorted(const AbstractTree& t) {
  return sorted_within(t, Bound::neg_inf(), Bound::pos_inf());
}

std::vector<std::pair<Key, Value>> in_order(const AbstractTree& t) {
  std::vector<std::pair<Key, Value>> out;
  collect(t, out);
  return out;
}

bool tree_implements(const AbstractTree& t, const AbstractMap& m) {
  if (!is_sorted(t)) return false;
  auto pairs = in_order(t);
  if (pairs.size() != m.size()) return false;
  // Sorted trees list keys in increasing order, as does the map.
  return std::equal(pairs.begin(), pairs.end(), m.bindings().begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first && a.second == b.second; });
}

AnnotatedTree annotate_ranges(const AbstractTree& t, const KeyRange& r) {
  if (!t) return AnnotatedTree{r, std::nullopt, kNoNode, {}};
  if (!r.contains(t->key)) throw RangeViolation(t->key, r);
  AnnotatedTree out{r, t->key, t->id, {}};
  out.children.reserve(2);
  out.children.push_back(annotate_ranges(t->left, r.left_of(t->key)));
  out.children.push_back(annotate_ranges(t->right, r.right_of(t->key)));
  return out;
}

std::vector<KeyRange> leaf_ranges(const AbstractTree& t) {
  std::vector<KeyRange> out;
  collect_leaves(annotate_ranges(t, KeyRange::full()), out);
  return out;
}

std::optional<KeyRange> AnnotatedTree::range_of(Key k) const {
  const AnnotatedTree* cur = this;
  while (!cur->is_leaf()) {
    if (k == *cur->key) return cur->range;
    cur = k < *cur->key ? &cur->left() : &cur->right();
  }
  return std::nullopt;
}

std::optional<KeyRange> AnnotatedTree::leaf_range_for(Key k) const {
  const AnnotatedTree* cur = this;
  while (!cur->is_leaf()) {
    if (k == *cur->key) return std::nullopt;
    cur = k < *cur->key ? &cur->left() : &cur->right();
  }
  return cur->range;
}

}  // namespace lockcouple
