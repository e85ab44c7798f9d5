#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <thread>

#include "fixtures.hpp"
#include "lockcouple/cg_map.hpp"
#include "lockcouple/hoh_map.hpp"

using namespace lockcouple;
using namespace lockcouple::testing;

namespace {

void insert_all(HohMap& m, const std::vector<Key>& keys) {
  for (Key k : keys) m.insert(k, val(static_cast<std::uint64_t>(k)));
}

}  // namespace

TEST(HohMap, EmptyMapIsASingleLeaf) {
  HohMap m;
  EXPECT_EQ(m.cell_count(), 1U);
  EXPECT_EQ(m.lookup(3), OpResult::absent());
  EXPECT_EQ(m.erase(3), OpResult::delete_done());
  EXPECT_TRUE(m.contents().empty());
}

TEST(HohMap, BasicOperations) {
  HohMap m;
  EXPECT_EQ(m.insert(5, val(1)), OpResult::insert_done());
  EXPECT_EQ(m.lookup(5), OpResult::found(val(1)));
  m.insert(5, val(2));
  EXPECT_EQ(m.lookup(5), OpResult::found(val(2)));
  EXPECT_EQ(m.cell_count(), 3U);
  m.erase(5);
  EXPECT_EQ(m.lookup(5), OpResult::absent());
  EXPECT_EQ(m.cell_count(), 1U);
}

TEST(HohMap, ShapeFollowsInsertionOrder) {
  HohMap m;
  insert_all(m, range_figure_keys());
  const AbstractTree live = m.snapshot();
  const AbstractTree expect = range_figure_tree();
  EXPECT_EQ(in_order(live), in_order(expect));
  EXPECT_EQ(live->right->right->left->left->left->key, 35);
  EXPECT_EQ(m.cell_count(), 2 * range_figure_keys().size() + 1);
}

TEST(HohMap, Insert38LandsAtTheLeafRanged35To40) {
  GhostMonitor mon(GhostMonitor::Policy::Collect, true);
  HohMap m({&mon, nullptr, InjectedBug::None});
  insert_all(m, range_figure_keys());

  const auto before = mon.registry_tree();
  ASSERT_TRUE(before);
  for (const auto& [k, label] : range_figure_labels()) {
    EXPECT_EQ(before->range_of(k)->to_string(), label) << k;
  }
  // Locate the leaf in the registry independently of the map.
  const AnnotatedTree* leaf = &*before;
  while (!leaf->is_leaf()) leaf = 38 < *leaf->key ? &leaf->left() : &leaf->right();
  EXPECT_EQ(leaf->range.to_string(), "(35,40)");

  m.insert(38, val(38));
  const auto g = mon.ghost(leaf->id);
  ASSERT_TRUE(g && g->contents);
  EXPECT_EQ(g->contents->key, 38);
  EXPECT_EQ(g->range.to_string(), "(35,40)");
  EXPECT_EQ(mon.registry_tree()->range_of(38)->to_string(), "(35,40)");
  EXPECT_TRUE(mon.clean());
  EXPECT_TRUE(mon.quiescent_check(m.live_view()).clean());
}

TEST(HohMap, Delete40PassesThroughTheFigureStates) {
  GhostMonitor mon(GhostMonitor::Policy::Collect, true);
  HohMap m({&mon, nullptr, InjectedBug::None});
  insert_all(m, delete_figure_keys());
  {
    AnnotatedTree t = *mon.registry_tree();
    for (const auto& [k, label] : delete_figure_state1()) EXPECT_EQ(t.range_of(k)->to_string(), label);
  }
  const std::size_t changes_before = mon.range_changes().size();

  m.erase(40);

  const auto snaps = mon.snapshots();
  ASSERT_EQ(snaps.size(), 3U);
  EXPECT_EQ(snaps[0].label, "rotate");
  EXPECT_EQ(render(snaps[0].ranges), delete_figure_state2());
  EXPECT_EQ(snaps[1].label, "rotate");
  EXPECT_EQ(render(snaps[1].ranges), delete_figure_state3());
  EXPECT_EQ(snaps[2].label, "splice");
  EXPECT_EQ(snaps[2].ranges.count(40), 0U);
  EXPECT_EQ(snaps[2].ranges.at(35).to_string(), "(30,50)");

  const auto changes = mon.range_changes();
  std::vector<RangeChange> mine(changes.begin() + static_cast<std::ptrdiff_t>(changes_before), changes.end());
  // The splice widens every node in the subtree that moves up; pick out 35.
  const auto it = std::find_if(mine.rbegin(), mine.rend(), [](const RangeChange& c) { return c.key == 35; });
  ASSERT_NE(it, mine.rend());
  EXPECT_EQ(it->cause, RangeChange::Cause::Splice);
  EXPECT_EQ(it->from.to_string(), "(30,40)");
  EXPECT_EQ(it->to.to_string(), "(30,50)");

  EXPECT_TRUE(mon.clean());
  EXPECT_TRUE(mon.quiescent_check(m.live_view()).clean());
  EXPECT_EQ(m.lookup(40), OpResult::absent());
  EXPECT_EQ(m.contents().size(), delete_figure_keys().size() - 1);
}

TEST(HohMap, DeleteKeepsGhostIdsWithTheirKeys) {
  GhostMonitor mon(GhostMonitor::Policy::Collect);
  HohMap m({&mon, nullptr, InjectedBug::None});
  insert_all(m, delete_figure_keys());
  auto ids_by_key = [](const AbstractTree& root) {
    std::map<Key, NodeId> ids;
    std::function<void(const AbstractTree&)> rec = [&](const AbstractTree& t) {
      if (!t) return;
      ids[t->key] = t->id;
      rec(t->left);
      rec(t->right);
    };
    rec(root);
    return ids;
  };
  auto before = ids_by_key(m.snapshot());
  m.erase(40);
  before.erase(40);
  EXPECT_EQ(ids_by_key(m.snapshot()), before);
}

TEST(HohMap, DestroyTwiceThrows) {
  HohMap m;
  m.insert(1, val(1));
  m.destroy();
  EXPECT_TRUE(m.destroyed());
  EXPECT_THROW(m.destroy(), std::logic_error);
  EXPECT_THROW(m.lookup(1), std::logic_error);
}

TEST(HohMap, MonitoredDestroyReclaimsEveryLock) {
  GhostMonitor mon(GhostMonitor::Policy::Collect);
  HohMap m({&mon, nullptr, InjectedBug::None});
  insert_all(m, {5, 3, 8, 1, 4, 7, 9});
  m.erase(5);
  m.erase(1);
  EXPECT_EQ(mon.ledger_size(), m.cell_count());
  m.destroy();
  EXPECT_EQ(mon.ledger_size(), 0U);
  EXPECT_EQ(mon.registry_size(), 0U);
  EXPECT_TRUE(mon.clean());
}

TEST(HohMap, DegenerateTreeTearsDownWithoutRecursion) {
  HohMap m;
  for (Key k = 0; k < 3000; ++k) m.insert(k, Value());
  EXPECT_EQ(m.contents().size(), 3000U);
  m.destroy();
}

// Property: random single-threaded workloads agree with the sequential map
// after every operation, and the monitor stays clean at every quiescent point.
TEST(HohMap, SequentialDifferentialAgainstOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    GhostMonitor mon(GhostMonitor::Policy::Collect);
    HohMap m({&mon, nullptr, InjectedBug::None});
    AbstractMap oracle;
    for (int i = 0; i < 400; ++i) {
      const Key k = static_cast<Key>(rng() % 32);
      Operation op;
      switch (rng() % 3) {
        case 0:
          op = Operation::insert(k, val(rng() % 100));
          break;
        case 1:
          op = Operation::lookup(k);
          break;
        default:
          op = Operation::erase(k);
      }
      ASSERT_EQ(m.apply(op), oracle.apply(op)) << op.to_string();
      if (i % 37 == 0) {
        const auto rep = mon.quiescent_check(m.live_view());
        ASSERT_TRUE(rep.clean()) << rep.to_json().dump();
      }
    }
    EXPECT_EQ(m.contents(), oracle);
    EXPECT_TRUE(tree_implements(m.snapshot(), oracle));
    m.destroy();
    EXPECT_TRUE(mon.clean());
  }
}

TEST(HohMap, ConcurrentDisjointWritersKeepEveryKey) {
  HohMap m;
  constexpr int kThreads = 4;
  constexpr Key kPer = 500;
  std::vector<std::thread> ts;
  for (int t = 0; t < kThreads; ++t) {
    ts.emplace_back([&, t] {
      std::mt19937_64 rng(static_cast<std::uint64_t>(t));
      std::vector<Key> keys;
      for (Key k = 0; k < kPer; ++k) keys.push_back(t * kPer + k);
      std::shuffle(keys.begin(), keys.end(), rng);
      for (Key k : keys) m.insert(k, val(static_cast<std::uint64_t>(k)));
      for (Key k : keys) {
        if (k % 2) m.erase(k);
      }
    });
  }
  for (auto& t : ts) t.join();
  const AbstractMap c = m.contents();
  EXPECT_EQ(c.size(), static_cast<std::size_t>(kThreads * kPer / 2));
  for (const auto& [k, v] : c.bindings()) {
    EXPECT_EQ(k % 2, 0);
    EXPECT_EQ(v, val(static_cast<std::uint64_t>(k)));
  }
  EXPECT_TRUE(is_sorted(m.snapshot()));
}

TEST(HohMap, ConcurrentMonitoredStressStaysClean) {
  GhostMonitor mon(GhostMonitor::Policy::Collect);
  Jitter jitter(9, std::chrono::microseconds(20));
  HohMap m({&mon, &jitter, InjectedBug::None});
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) {
    ts.emplace_back([&, t] {
      jitter.bind_this_thread(static_cast<std::uint64_t>(t));
      std::mt19937_64 rng(100 + static_cast<std::uint64_t>(t));
      for (int i = 0; i < 300; ++i) {
        const Key k = static_cast<Key>(rng() % 16);
        switch (rng() % 3) {
          case 0:
            m.insert(k, val(rng() % 8));
            break;
          case 1:
            m.lookup(k);
            break;
          default:
            m.erase(k);
        }
      }
    });
  }
  for (auto& t : ts) t.join();
  const auto rep = mon.quiescent_check(m.live_view());
  EXPECT_TRUE(rep.clean()) << rep.to_json().dump();
  m.destroy();
  EXPECT_TRUE(mon.clean()) << mon.violations().front().to_json().dump();
  EXPECT_EQ(mon.ledger_size(), 0U);
}

TEST(HohMap, InjectedBugIsCaughtByTheMonitor) {
  GhostMonitor mon(GhostMonitor::Policy::Collect);
  HohMap m({&mon, nullptr, InjectedBug::ReleaseBeforeAcquire});
  m.insert(1, val(1));
  m.insert(2, val(2));  // descends one level
  const auto vs = mon.violations();
  ASSERT_FALSE(vs.empty());
  EXPECT_EQ(vs.front().kind, "order");
}

TEST(CgMap, MatchesOracleAndRefusesUseAfterDestroy) {
  GhostMonitor mon(GhostMonitor::Policy::Collect);
  CgMap m({&mon, nullptr});
  AbstractMap oracle;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10000; ++i) {
    const Key k = static_cast<Key>(rng() % 50);
    const Operation op = rng() % 2 ? Operation::insert(k, val(rng() % 9)) : Operation::erase(k);
    ASSERT_EQ(m.apply(op), oracle.apply(op));
  }
  EXPECT_EQ(m.contents(), oracle);
  EXPECT_TRUE(mon.quiescent_check(m.live_view()).clean());
  EXPECT_TRUE(mon.clean());
  m.destroy();
  EXPECT_THROW(m.destroy(), std::logic_error);
  EXPECT_THROW(m.lookup(1), std::logic_error);
}
