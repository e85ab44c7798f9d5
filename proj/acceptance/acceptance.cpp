// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
// blocking criterion fails.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "history_gen.hpp"
#include "lockcouple/cli.hpp"
#include "lockcouple/harness.hpp"
#include "lockcouple/hoh_map.hpp"
#include "lockcouple/linearizability.hpp"

using namespace lockcouple;
using namespace lockcouple::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int blocking_failures = 0;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt_ms(double ms) {
  std::ostringstream s;
  s.precision(3);
  s << ms << "ms";
  return s.str();
}

void report(const std::string& name, const Outcome& o, bool blocking = true) {
  const char* tag = o.pass ? "PASS" : (blocking ? "FAIL" : "INFO");
  std::cout << tag << "  " << name << "  " << o.detail << std::endl;
  if (!o.pass && blocking) ++blocking_failures;
}

void insert_all(HohMap& m, const std::vector<Key>& keys) {
  for (Key k : keys) m.insert(k, val(static_cast<std::uint64_t>(k)));
}

Outcome range_fixture() {
  const AbstractTree tree = range_figure_tree();
  const auto t0 = Clock::now();
  const AnnotatedTree a = annotate_ranges(tree, KeyRange::full());
  const auto leaves = leaf_ranges(tree);
  const double ms = ms_since(t0);

  std::string bad;
  for (const auto& [k, label] : range_figure_labels()) {
    if (a.range_of(k)->to_string() != label) bad += " node " + std::to_string(k);
  }
  const auto& expect = range_figure_leaf_labels();
  if (leaves.size() != expect.size()) {
    bad += " leaf count";
  } else {
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (leaves[i].to_string() != expect[i]) bad += " leaf " + expect[i];
    }
  }
  if (!bad.empty()) return {false, "mismatch:" + bad};
  return {ms < 1.0, std::to_string(range_figure_labels().size() + expect.size()) + " labels in " + fmt_ms(ms)};
}

Outcome insert38_fixture() {
  GhostMonitor mon(GhostMonitor::Policy::Collect);
  HohMap m({&mon, nullptr, InjectedBug::None});
  insert_all(m, range_figure_keys());

  const auto t0 = Clock::now();
  const AnnotatedTree before = *mon.registry_tree();
  const AnnotatedTree* leaf = &before;
  while (!leaf->is_leaf()) leaf = 38 < *leaf->key ? &leaf->left() : &leaf->right();
  m.insert(38, val(38));
  const auto g = mon.ghost(leaf->id);
  const double ms = ms_since(t0);

  if (leaf->range.to_string() != "(35,40)") return {false, "search ended at leaf " + leaf->range.to_string()};
  if (!g || !g->contents || g->contents->key != 38) return {false, "38 did not land in the (35,40) leaf"};
  if (g->range.to_string() != "(35,40)" || !mon.clean()) return {false, "range changed or monitor violation"};
  return {ms < 1.0, "38 at (35,40) in " + fmt_ms(ms)};
}

Outcome delete40_fixture() {
  GhostMonitor mon(GhostMonitor::Policy::Collect, true);
  HohMap m({&mon, nullptr, InjectedBug::None});
  insert_all(m, delete_figure_keys());
  const std::size_t changes_before = mon.range_changes().size();

  const auto t0 = Clock::now();
  m.erase(40);
  const double ms = ms_since(t0);

  const auto snaps = mon.snapshots();
  auto state_seen = [&](const std::map<Key, std::string>& want) {
    for (const auto& s : snaps) {
      if (render(s.ranges) == want) return true;
    }
    return false;
  };
  if (!state_seen(delete_figure_state2())) return {false, "state 2 not observed"};
  if (!state_seen(delete_figure_state3())) return {false, "state 3 not observed"};

  const auto changes = mon.range_changes();
  const RangeChange* last35 = nullptr;
  for (std::size_t i = changes_before; i < changes.size(); ++i) {
    if (changes[i].key == 35) last35 = &changes[i];
  }
  if (!last35) return {false, "no range change for 35"};
  const std::string edge = last35->from.to_string() + "->" + last35->to.to_string();
  if (edge != "(30,40)->(30,50)") return {false, "35 went " + edge};
  if (!mon.clean()) return {false, "monitor violation"};
  return {ms < 1.0, "states 2,3 seen; 35 " + edge + " in " + fmt_ms(ms)};
}

Outcome sequential_equivalence() {
  const auto t0 = Clock::now();
  for (std::uint64_t seed : {1, 2, 3}) {
    WorkloadSpec s;
    s.seed = seed;
    s.threads = 1;
    s.ops_per_thread = 100000;
    s.key_lo = 0;
    s.key_hi = 4095;
    const RunOutcome out = run_recorded(Target::Hoh, s);
    if (out.failure) return {false, *out.failure};
    if (out.final_contents.canonical() != sequential_outcome(s).canonical()) {
      return {false, "seed " + std::to_string(seed) + " diverged"};
    }
  }
  const double ms = ms_since(t0);
  return {ms < 10000, "3 x 1e5 ops in " + fmt_ms(ms)};
}

struct ConcurrentTally {
  int runs = 0;
  int non_linearizable = 0;
  int dirty = 0;
  int unreclaimed = 0;
  double ms = 0;
  std::string first_problem;
};

ConcurrentTally concurrent_runs() {
  ConcurrentTally t;
  std::mt19937_64 sizes(2024);
  const auto t0 = Clock::now();
  for (unsigned threads : {2U, 3U, 4U}) {
    for (int i = 0; i < 1000; ++i) {
      WorkloadSpec s;
      s.seed = cli::derive_seed(threads, static_cast<std::uint64_t>(i));
      s.threads = threads;
      s.ops_per_thread = 6 + static_cast<unsigned>(sizes() % 3);
      s.key_lo = 0;
      s.key_hi = 7;
      RunOptions o;
      o.monitor = true;
      o.jitter = true;
      o.timeout = std::chrono::seconds(30);
      const RunOutcome out = run_recorded(Target::Hoh, s, o);
      ++t.runs;
      const std::string where = std::to_string(threads) + " threads, seed " + std::to_string(s.seed);
      if (out.failure || !check(with_final_reads(out.history, out.final_contents)).linearizable) {
        ++t.non_linearizable;
        if (t.first_problem.empty()) t.first_problem = "non-linearizable at " + where;
      }
      if (!out.monitor_clean()) {
        ++t.dirty;
        if (t.first_problem.empty()) t.first_problem = out.violations.front().kind + " at " + where;
      }
      if (!out.reclaimed || out.leaked_ids != 0) {
        ++t.unreclaimed;
        if (t.first_problem.empty()) t.first_problem = "reclamation at " + where;
      }
    }
  }
  t.ms = ms_since(t0);
  return t;
}

Outcome checker_agreement() {
  std::mt19937_64 rng(31337);
  int disagreements = 0;
  int negatives = 0;
  for (int i = 0; i < 10000; ++i) {
    const History h = random_history(rng);
    const bool fast = check(h).linearizable;
    if (fast != brute_force_check(h).linearizable) ++disagreements;
    if (!fast) ++negatives;
  }
  return {disagreements == 0, std::to_string(disagreements) + " disagreements on 1e4 histories (" +
                                  std::to_string(negatives) + " non-linearizable)"};
}

Outcome client_demo_runs() {
  const auto t0 = Clock::now();
  for (int seed = 0; seed < 1000; ++seed) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::main({"demo", "--seed", std::to_string(seed), "--jitter", "--monitor"}, out, err);
    if (code != 0 || out.str() != "3\n") {
      return {false, "seed " + std::to_string(seed) + " exit " + std::to_string(code) + " printed " + out.str()};
    }
  }
  const double ms = ms_since(t0);
  return {ms < 120000, "1000 runs returned 3 in " + fmt_ms(ms)};
}

Outcome negative_control() {
  const std::string failures = (std::filesystem::temp_directory_path() / "lockcouple-acceptance-fuzz").string();
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::main({"fuzz", "--iterations", "1000", "--monitor", "--jitter", "--inject-bug",
                              "release-before-acquire", "--out", failures},
                             out, err);
  if (code != cli::kMonitorFailed && code != cli::kCheckFailed) {
    return {false, "fuzz exited " + std::to_string(code)};
  }
  const auto summary = nlohmann::json::parse(out.str());
  return {true, "caught at iteration " + summary["iterations"].dump() + " (exit " + std::to_string(code) + ")"};
}

Outcome contention() {
  WorkloadSpec s;
  s.threads = 8;
  s.key_lo = 0;
  s.key_hi = (1 << 16) - 1;
  s.mix = {5, 90, 5};
  s.disjoint = true;
  const BenchReport hoh = bench(Target::Hoh, s, std::chrono::seconds(1));
  const BenchReport cg = bench(Target::Cg, s, std::chrono::seconds(1));
  std::ostringstream d;
  d.precision(4);
  d << "hoh " << hoh.throughput << " ops/s vs cg " << cg.throughput << " ops/s on "
    << std::thread::hardware_concurrency() << " cores";
  return {hoh.throughput >= cg.throughput, d.str()};
}

}  // namespace

int main() {
  report("range-annotation fixture", range_fixture());
  report("insert-38 fixture", insert38_fixture());
  report("delete-40 fixture", delete40_fixture());
  report("sequential equivalence", sequential_equivalence());

  const ConcurrentTally t = concurrent_runs();
  const std::string note = t.first_problem.empty() ? "" : "; first: " + t.first_problem;
  const Outcome agreement = checker_agreement();
  report("linearizability under concurrency",
         {t.non_linearizable == 0 && t.ms < 300000 && agreement.pass,
          std::to_string(t.runs - t.non_linearizable) + "/" + std::to_string(t.runs) + " linearizable in " +
              fmt_ms(t.ms) + "; " + agreement.detail + note});
  report("monitor cleanliness", {t.dirty == 0, std::to_string(t.dirty) + " runs with violations" + note});
  report("reclamation", {t.unreclaimed == 0, std::to_string(t.unreclaimed) + " runs leaked or not reclaimed" + note});

  report("client demo", client_demo_runs());
  report("negative control", negative_control());

  const bool enough_cores = std::thread::hardware_concurrency() >= 4;
  report(enough_cores ? "contention" : "contention (informative, fewer than 4 cores)", contention(), enough_cores);

  return blocking_failures == 0 ? 0 : 1;
}
