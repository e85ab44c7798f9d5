#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "lockcouple/seq_oracle.hpp"

using namespace lockcouple;
using lockcouple::testing::range_figure_labels;
using lockcouple::testing::range_figure_tree;
using lockcouple::testing::val;

TEST(AbstractMap, InsertOverwritesAndDeleteIsIdempotent) {
  AbstractMap m;
  EXPECT_EQ(m.apply(Operation::insert(5, val(1))), OpResult::insert_done());
  EXPECT_EQ(m.apply(Operation::insert(5, val(2))), OpResult::insert_done());
  EXPECT_EQ(m.apply(Operation::lookup(5)), OpResult::found(val(2)));
  EXPECT_EQ(m.apply(Operation::erase(5)), OpResult::delete_done());
  EXPECT_EQ(m.apply(Operation::erase(5)), OpResult::delete_done());
  EXPECT_EQ(m.apply(Operation::lookup(5)), OpResult::absent());
  EXPECT_TRUE(m.empty());
}

TEST(AbstractMap, PureFunctionsLeaveTheirInputAlone) {
  const AbstractMap m{{1, val(1)}};
  const AbstractMap m2 = seq_insert(m, 2, val(2));
  EXPECT_EQ(m.size(), 1U);
  EXPECT_EQ(m2.size(), 2U);
  EXPECT_EQ(seq_lookup(m2, 2), val(2));
  EXPECT_EQ(seq_delete(m2, 1), (AbstractMap{{2, val(2)}}));
  EXPECT_EQ(seq_fold({Operation::insert(3, val(9)), Operation::erase(3), Operation::insert(4, val(4))}),
            (AbstractMap{{4, val(4)}}));
}

TEST(AbstractMap, CanonicalEncodingDecidesEquality) {
  // Same bytes arranged differently must not collide: (1,"ab") vs (1,"a"),(98,...)
  AbstractMap a{{1, Value({0x61, 0x62})}};
  AbstractMap b{{1, Value({0x61})}};
  EXPECT_NE(a.canonical(), b.canonical());
  AbstractMap c{{1, Value({0x61, 0x62})}};
  EXPECT_EQ(a.canonical(), c.canonical());
  EXPECT_EQ(a.digest(), c.digest());
}

TEST(AbstractMap, AdditiveDigestTracksIncrementalUpdates) {
  std::mt19937_64 rng(11);
  AbstractMap m;
  std::uint64_t running = 0;
  for (int i = 0; i < 2000; ++i) {
    const Key k = static_cast<Key>(rng() % 16);
    if (rng() % 3 == 0) {
      if (auto old = m.get(k)) running -= binding_hash(k, *old);
      m.apply(Operation::erase(k));
    } else {
      const Value v = val(rng() % 5);
      if (auto old = m.get(k)) running -= binding_hash(k, *old);
      m.apply(Operation::insert(k, v));
      running += binding_hash(k, v);
    }
    ASSERT_EQ(running, m.additive_digest());
  }
}

TEST(AbstractTree, InsertionOrderDeterminesShape) {
  const AbstractTree t = range_figure_tree();
  ASSERT_TRUE(t);
  EXPECT_EQ(t->key, 20);
  EXPECT_EQ(t->left->key, 15);
  EXPECT_EQ(t->right->key, 30);
  EXPECT_EQ(t->right->right->left->left->left->key, 35);
  EXPECT_EQ(t->right->right->left->left->left->id, 8U);
  EXPECT_TRUE(is_sorted(t));
}

TEST(RangeAnnotation, ReproducesEveryFigureLabel) {
  const AnnotatedTree a = annotate_ranges(range_figure_tree(), KeyRange::full());
  for (const auto& [key, label] : range_figure_labels()) {
    ASSERT_TRUE(a.range_of(key)) << key;
    EXPECT_EQ(a.range_of(key)->to_string(), label) << key;
  }
  const AnnotatedTree& n35 = a.right().right().left().left().left();
  ASSERT_EQ(n35.key, 35);
  EXPECT_EQ(n35.left().range.to_string(), "(30,35)");
  EXPECT_EQ(n35.right().range.to_string(), "(35,40)");
  EXPECT_EQ(a.leaf_range_for(38)->to_string(), "(35,40)");
}

TEST(RangeAnnotation, RejectsKeysOutsideTheirRange) {
  // 25 placed right of 30 violates (30,+inf).
  const AbstractTree bad = node(20, val(0), nullptr, node(30, val(0), nullptr, node(25, val(0))));
  EXPECT_FALSE(is_sorted(bad));
  try {
    annotate_ranges(bad, KeyRange::full());
    FAIL() << "expected RangeViolation";
  } catch (const RangeViolation& e) {
    EXPECT_EQ(e.key, 25);
    EXPECT_EQ(e.range.to_string(), "(30,+inf)");
  }
}

namespace {

std::vector<Key> random_keys(std::mt19937_64& rng, std::size_t n, Key span) {
  std::vector<Key> keys;
  std::set<Key> seen;
  while (keys.size() < n) {
    const Key k = static_cast<Key>(rng() % static_cast<std::uint64_t>(span)) - span / 2;
    if (seen.insert(k).second) keys.push_back(k);
  }
  return keys;
}

}  // namespace

// Property: for random insertion orders, leaf ranges partition the keys not in
// the tree, each internal range contains its key, and the tree implements the
// folded map.
TEST(RangeAnnotation, LeafRangesPartitionTheComplementProperty) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto keys = random_keys(rng, 1 + rng() % 25, 80);
    const AbstractTree t = tree_from_insertions(keys, [](Key k) { return val(static_cast<std::uint64_t>(k)); });
    const auto leaves = leaf_ranges(t);
    ASSERT_EQ(leaves.size(), keys.size() + 1);
    EXPECT_EQ(leaves.front().lower(), Bound::neg_inf());
    EXPECT_EQ(leaves.back().upper(), Bound::pos_inf());
    const std::set<Key> present(keys.begin(), keys.end());
    for (std::size_t i = 0; i + 1 < leaves.size(); ++i) {
      // Adjacent leaves meet exactly at a stored key.
      ASSERT_EQ(leaves[i].upper(), leaves[i + 1].lower());
      ASSERT_TRUE(present.count(leaves[i].upper().key()));
    }
    const AnnotatedTree a = annotate_ranges(t, KeyRange::full());
    for (Key probe = -45; probe <= 45; ++probe) {
      if (present.count(probe)) {
        ASSERT_TRUE(a.range_of(probe)->contains(probe));
      } else {
        ASSERT_TRUE(a.leaf_range_for(probe)->contains(probe));
      }
    }
    AbstractMap m;
    for (Key k : keys) m.apply(Operation::insert(k, val(static_cast<std::uint64_t>(k))));
    EXPECT_TRUE(tree_implements(t, m));
    m.apply(Operation::erase(keys.front()));
    EXPECT_FALSE(tree_implements(t, m));
  }
}

TEST(AbstractTree, InOrderIsSortedAndComplete) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto keys = random_keys(rng, 1 + rng() % 40, 1000);
    const AbstractTree t = tree_from_insertions(keys, [](Key) { return val(0); });
    const auto pairs = in_order(t);
    ASSERT_EQ(pairs.size(), keys.size());
    EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end(),
                               [](const auto& a, const auto& b) { return a.first < b.first; }));
  }
}

TEST(RangeFigure, LeafLabelsMatch) {
  std::vector<std::string> got;
  for (const auto& r : leaf_ranges(range_figure_tree())) got.push_back(r.to_string());
  EXPECT_EQ(got, lockcouple::testing::range_figure_leaf_labels());
}
