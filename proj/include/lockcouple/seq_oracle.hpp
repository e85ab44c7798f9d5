#pragma once

// Single-threaded reference semantics: the abstract map, the abstract tree,
// range annotation and the "tree implements map" relation. Everything here is
// a pure function over immutable values.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lockcouple/keys.hpp"
#include "lockcouple/op.hpp"

namespace lockcouple {

class AbstractMap {
 public:
  using Storage = std::map<Key, Value>;

  AbstractMap() = default;
  AbstractMap(std::initializer_list<Storage::value_type> init) : bindings_(init) {}
  explicit AbstractMap(Storage s) : bindings_(std::move(s)) {}

  const Storage& bindings() const { return bindings_; }
  std::size_t size() const { return bindings_.size(); }
  bool empty() const { return bindings_.empty(); }

  std::optional<Value> get(Key k) const;

  /// In-place transition; returns the result the sequential map produces.
  OpResult apply(const Operation& op);

  /// Sorted (key, length, bytes) serialization. Two maps are equal iff their
  /// canonical encodings are equal.
  std::string canonical() const;
  std::uint64_t digest() const;
  /// Order-independent digest: the wrapping sum of binding_hash over all
  /// bindings, so it can be maintained incrementally.
  std::uint64_t additive_digest() const;

  bool operator==(const AbstractMap&) const = default;

 private:
  Storage bindings_;
};

std::uint64_t binding_hash(Key k, const Value& v);

AbstractMap seq_insert(const AbstractMap& m, Key k, const Value& v);
std::optional<Value> seq_lookup(const AbstractMap& m, Key k);
AbstractMap seq_delete(const AbstractMap& m, Key k);

/// Folds a sequence of operations over the empty map.
AbstractMap seq_fold(const std::vector<Operation>& ops);

struct TreeNode;
/// nullptr is a Leaf.
using AbstractTree = std::shared_ptr<const TreeNode>;

struct TreeNode {
  Key key;
  Value value;
  AbstractTree left;
  AbstractTree right;
  NodeId id = kNoNode;
};

inline AbstractTree leaf() { return nullptr; }
AbstractTree node(Key k, Value v, AbstractTree left = nullptr, AbstractTree right = nullptr,
                  NodeId id = kNoNode);

/// Builds the tree that sequential unbalanced BST insertion of `keys` (in
/// order) produces, with value `value_of(k)` per key and ids 1, 2, ... in
/// insertion order.
AbstractTree tree_from_insertions(const std::vector<Key>& keys,
                                  const std::function<Value(Key)>& value_of);

bool is_sorted(const AbstractTree& t);
std::vector<std::pair<Key, Value>> in_order(const AbstractTree& t);
bool tree_implements(const AbstractTree& t, const AbstractMap& m);

struct RangeViolation : std::runtime_error {
  RangeViolation(Key key, const KeyRange& range)
      : std::runtime_error("key " + std::to_string(key) + " outside derived range " +
                           range.to_string()),
        key(key),
        range(range) {}
  Key key;
  KeyRange range;
};

/// A tree whose every position, leaves included, carries its derived range.
struct AnnotatedTree {
  KeyRange range;
  std::optional<Key> key;  // absent for leaves
  NodeId id = kNoNode;
  std::vector<AnnotatedTree> children;  // empty for leaves, {left, right} otherwise

  bool is_leaf() const { return !key.has_value(); }
  const AnnotatedTree& left() const { return children.at(0); }
  const AnnotatedTree& right() const { return children.at(1); }

  /// Range of the internal node holding `k`, if any.
  std::optional<KeyRange> range_of(Key k) const;
  /// Range of the leaf a search for `k` ends at (k must be absent).
  std::optional<KeyRange> leaf_range_for(Key k) const;

  bool operator==(const AnnotatedTree&) const = default;
};

/// Throws RangeViolation if a key lies outside its derived range.
AnnotatedTree annotate_ranges(const AbstractTree& t, const KeyRange& r);

/// Ranges of every leaf position under the root range (-inf,+inf), left to right.
std::vector<KeyRange> leaf_ranges(const AbstractTree& t);

}  // namespace lockcouple
