#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include "fixtures.hpp"
#include "lockcouple/ghost_monitor.hpp"
#include "lockcouple/hoh_map.hpp"

using namespace lockcouple;
using lockcouple::testing::val;

namespace {

bool has_kind(const std::vector<Violation>& vs, const std::string& kind) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == kind; });
}

NodeContents contents(Key k, std::uint64_t x, NodeId l, NodeId r) {
  return {k, val(x).digest(), l, r};
}

// Drives the monitor by hand: a root holding key 10 over leaves 2 and 3, with
// leaf 3 then filled by key 20 over leaves 4 and 5. Ends quiescent.
void build_small_tree(GhostMonitor& m) {
  m.on_node_created(1, KeyRange::full(), std::nullopt, std::nullopt);
  m.on_op_begin();
  m.on_acquire(1, std::nullopt, 10);
  m.on_node_created(2, KeyRange::parse("(-inf,10)"), std::nullopt, 1);
  m.on_node_created(3, KeyRange::parse("(10,+inf)"), std::nullopt, 1);
  m.on_contents_set(1, contents(10, 10, 2, 3));
  m.on_linearization(Operation::insert(10, val(10)), OpResult::insert_done(), 1);
  m.on_release(1);
  m.on_op_end();

  m.on_op_begin();
  m.on_acquire(1, std::nullopt, 20);
  m.on_acquire(3, 1, 20);
  m.on_release(1);
  m.on_node_created(4, KeyRange::parse("(10,20)"), std::nullopt, 3);
  m.on_node_created(5, KeyRange::parse("(20,+inf)"), std::nullopt, 3);
  m.on_contents_set(3, contents(20, 20, 4, 5));
  m.on_linearization(Operation::insert(20, val(20)), OpResult::insert_done(), 3);
  m.on_release(3);
  m.on_op_end();
}

}  // namespace

TEST(GhostMonitor, CorrectProtocolIsClean) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  EXPECT_TRUE(m.clean()) << m.violations().front().to_json().dump();
  EXPECT_EQ(m.registry_size(), 5U);
  EXPECT_EQ(m.ledger_size(), 5U);
  EXPECT_EQ(m.shadow(), (AbstractMap{{10, val(10)}, {20, val(20)}}));
  EXPECT_EQ(m.ghost(3)->range.to_string(), "(10,+inf)");
  EXPECT_TRUE(m.ledger().thread_held().empty());
}

TEST(GhostMonitor, ChildAcquiredAfterParentReleaseIsAnOrderViolation) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_op_begin();
  m.on_acquire(1, std::nullopt, 20);
  m.on_release(1);
  m.on_acquire(3, 1, 20);
  EXPECT_TRUE(has_kind(m.violations(), "order"));
}

TEST(GhostMonitor, WitnessMustBeTheActualParent) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_op_begin();
  m.on_acquire(1, std::nullopt, 15);
  m.on_acquire(4, 1, 15);  // 4 is a grandchild of 1
  EXPECT_TRUE(has_kind(m.violations(), "order"));
}

TEST(GhostMonitor, ThirdLockInsideAnOperationIsFlagged) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_op_begin();
  m.on_acquire(1, std::nullopt, 30);
  m.on_acquire(3, 1, 30);
  m.on_acquire(5, 3, 30);
  EXPECT_TRUE(has_kind(m.violations(), "held-count"));
}

TEST(GhostMonitor, DoubleAcquireAndStrayReleaseAreFlagged) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_acquire(1, std::nullopt);
  m.on_acquire(1, std::nullopt);
  EXPECT_TRUE(has_kind(m.violations(), "double-acquire"));
  m.on_release(2);
  EXPECT_TRUE(has_kind(m.violations(), "release-without-acquire"));
}

TEST(GhostMonitor, TraversalOutsideRangeIsFlagged) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_op_begin();
  m.on_acquire(1, std::nullopt, 5);
  m.on_acquire(3, 1, 5);  // 5 belongs left of 10
  EXPECT_TRUE(has_kind(m.violations(), "traversal-range"));
}

TEST(GhostMonitor, RangesNeverShrink) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_acquire(1, std::nullopt);
  m.on_range_widen(3, KeyRange::parse("(15,+inf)"));
  EXPECT_TRUE(has_kind(m.violations(), "range-shrink"));
  EXPECT_EQ(m.ghost(3)->range.to_string(), "(10,+inf)");
}

TEST(GhostMonitor, WidenNeedsTheNodeOrAnAncestorLock) {
  GhostMonitor m(GhostMonitor::Policy::Collect, true);
  build_small_tree(m);
  m.on_range_widen(4, KeyRange::parse("(5,20)"));
  EXPECT_TRUE(has_kind(m.violations(), "lock-not-held"));

  GhostMonitor ok(GhostMonitor::Policy::Collect, true);
  build_small_tree(ok);
  ok.on_acquire(1, std::nullopt);
  ok.on_range_widen(4, KeyRange::parse("(5,20)"));
  EXPECT_TRUE(ok.clean());
  ASSERT_FALSE(ok.range_changes().empty());
  const RangeChange c = ok.range_changes().back();
  EXPECT_EQ(c.id, 4U);
  EXPECT_EQ(c.cause, RangeChange::Cause::Widen);
  EXPECT_EQ(c.from.to_string(), "(10,20)");
  EXPECT_EQ(c.to.to_string(), "(5,20)");
}

TEST(GhostMonitor, ResultsMustAgreeWithTheShadowMap) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_linearization(Operation::lookup(10), OpResult::absent());
  EXPECT_TRUE(has_kind(m.violations(), "transition-mismatch"));
}

TEST(GhostMonitor, LinearizationMustBeWitnessedByTheLockedNode) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_acquire(1, std::nullopt);
  // Node 1 holds 10, not 20.
  m.on_linearization(Operation::lookup(20), OpResult::found(val(20)), 1);
  EXPECT_TRUE(has_kind(m.violations(), "witness"));

  GhostMonitor n(GhostMonitor::Policy::Collect);
  build_small_tree(n);
  // Witness node whose lock is not held.
  n.on_linearization(Operation::lookup(10), OpResult::found(val(10)), 1);
  EXPECT_TRUE(has_kind(n.violations(), "lock-not-held"));
}

TEST(GhostMonitor, ContentsChangeRequiresTheNodeLock) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_contents_set(1, contents(10, 11, 2, 3));
  EXPECT_TRUE(has_kind(m.violations(), "lock-not-held"));
}

TEST(GhostMonitor, DuplicateIdsAreRejected) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  m.on_node_created(1, KeyRange::full(), std::nullopt, std::nullopt);
  m.on_node_created(1, KeyRange::full(), std::nullopt, std::nullopt);
  EXPECT_TRUE(has_kind(m.violations(), "duplicate-id"));
}

TEST(GhostMonitor, TeardownFailsWhileAShareIsStillOut) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  m.on_acquire(1, std::nullopt);
  const auto problems = m.on_map_destroyed({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5});
  EXPECT_TRUE(has_kind(problems, "ledger-incomplete"));
}

TEST(GhostMonitor, TeardownReportsLeakedIds) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  const auto problems = m.on_map_destroyed({1, 2, 3, 4}, {1, 2, 3, 4});
  EXPECT_TRUE(has_kind(problems, "leaked-id"));
  EXPECT_EQ(m.registry_size(), 0U);
}

TEST(GhostMonitor, CleanTeardownAssemblesEveryLock) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  build_small_tree(m);
  const auto problems = m.on_map_destroyed({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5});
  EXPECT_TRUE(problems.empty());
  EXPECT_EQ(m.ledger_size(), 0U);
}

TEST(GhostMonitor, QuiescentCheckCatchesCorruptedRange) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  HohMap map({&m, nullptr, InjectedBug::None});
  for (Key k : {50, 20, 70, 10, 30}) map.insert(k, val(static_cast<std::uint64_t>(k)));
  ASSERT_TRUE(m.quiescent_check(map.live_view()).clean());
  const NodeId id = map.snapshot()->left->id;  // node holding 20
  m.corrupt_range_for_testing(id, KeyRange::parse("(-inf,60)"));
  const auto rep = m.quiescent_check(map.live_view());
  EXPECT_TRUE(has_kind(rep.violations, "range-drift"));
}

TEST(GhostMonitor, QuiescentCheckCatchesLiveDivergence) {
  GhostMonitor m(GhostMonitor::Policy::Collect);
  HohMap map({&m, nullptr, InjectedBug::None});
  map.insert(1, val(1));
  LiveView v = map.live_view();
  v.contents.apply(Operation::insert(2, val(2)));
  EXPECT_FALSE(m.quiescent_check(v).clean());
  LiveView w = map.live_view();
  w.ghost_ids.push_back(999);
  EXPECT_TRUE(has_kind(m.quiescent_check(w).violations, "id-set"));
}

TEST(GhostMonitor, ViolationJsonCarriesKindAndNodes) {
  Violation v{"order", "child lock acquired", {1, 3}, {"(10,+inf)"}, 42};
  const auto j = v.to_json();
  EXPECT_EQ(j["kind"], "order");
  EXPECT_EQ(j["nodes"], nlohmann::json::array({1, 3}));
  EXPECT_EQ(j["event_seq"], 42);
}

TEST(GhostMonitorDeathTest, AbortPolicyStopsTheProcess) {
  EXPECT_DEATH(
      {
        GhostMonitor m(GhostMonitor::Policy::Abort);
        m.on_node_created(1, KeyRange::full(), std::nullopt, std::nullopt);
        m.on_release(1);
      },
      "release-without-acquire");
}
