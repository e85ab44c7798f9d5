#pragma once

// Seeded workloads, recorded multi-threaded runs, throughput benchmarks and
// the producer/consumer client demo.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lockcouple/ghost_monitor.hpp"
#include "lockcouple/hoh_map.hpp"
#include "lockcouple/linearizability.hpp"
#include "lockcouple/op.hpp"
#include "lockcouple/seq_oracle.hpp"

namespace lockcouple {

enum class Target : std::uint8_t { Hoh, Cg };

std::string_view to_string(Target t);
/// "hoh" or "cg"; throws std::invalid_argument otherwise.
Target parse_target(std::string_view s);

struct Mix {
  unsigned insert = 40;
  unsigned lookup = 40;
  unsigned erase = 20;

  /// "I:L:D", e.g. "5:90:5". Throws std::invalid_argument unless the parts sum to 100.
  static Mix parse(std::string_view text);
  std::string to_string() const;
  bool operator==(const Mix&) const = default;
};

struct WorkloadSpec {
  std::uint64_t seed = 1;
  unsigned threads = 4;
  unsigned ops_per_thread = 8;
  Key key_lo = 0;  // inclusive
  Key key_hi = 7;  // inclusive
  Mix mix;
  std::size_t value_len = 8;
  // Give each thread its own slice of the key space.
  bool disjoint = false;

  /// Throws std::invalid_argument.
  void validate() const;
  nlohmann::json to_json() const;
};

/// One operation list per thread; a pure function of the spec.
std::vector<std::vector<Operation>> generate(const WorkloadSpec& spec);

struct RunOptions {
  bool monitor = false;
  bool jitter = false;
  std::chrono::microseconds max_pause{100};
  InjectedBug bug = InjectedBug::None;
  // A run that outlives this is reported and the process exits with status 3;
  // deadlocked workers cannot be reclaimed any other way.
  std::optional<std::chrono::milliseconds> timeout;
};

struct RunOutcome {
  History history;
  AbstractMap final_contents;
  std::vector<Violation> violations;  // monitored runs only
  std::optional<std::string> failure;  // a worker threw
  bool reclaimed = false;              // destroy() assembled every lock
  std::size_t leaked_ids = 0;

  bool monitor_clean() const { return violations.empty(); }
};

RunOutcome run_recorded(Target target, const WorkloadSpec& spec, const RunOptions& options = {});

/// Appends, after every recorded event, one sequential lookup per key that
/// the history touches or `final_state` holds, answered from `final_state`.
/// Checking the result also checks that some linearization ends in the
/// observed final state.
History with_final_reads(const History& h, const AbstractMap& final_state);

/// Applies every operation of every thread, thread by thread, on the oracle.
/// For a single-threaded spec this is the expected final state.
AbstractMap sequential_outcome(const WorkloadSpec& spec);

struct BenchReport {
  Target target = Target::Hoh;
  WorkloadSpec spec;
  std::uint64_t ops = 0;
  double seconds = 0;
  double throughput = 0;  // ops per second
  std::uint64_t p50_ns = 0;
  std::uint64_t p99_ns = 0;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Prefills about half the key space, then runs spec.threads workers that
/// draw operations from the mix until `duration` elapses.
BenchReport bench(Target target, const WorkloadSpec& spec, std::chrono::duration<double> duration);

struct DemoOptions {
  std::uint64_t seed = 0;
  bool jitter = true;
  std::chrono::microseconds max_pause{100};
  bool monitor = true;
  std::chrono::milliseconds timeout{10000};
};

struct DemoOutcome {
  std::optional<std::uint64_t> result;  // empty on timeout
  // Distinct successive values the consumer saw for key 2.
  std::vector<std::optional<std::uint64_t>> observed;
  bool progression_ok = false;
  AbstractMap final_contents;
  std::vector<Violation> violations;

  bool timed_out() const { return !result.has_value(); }
};

/// Producer inserts 1->1, 2->2, 1->3, 2->4; the consumer polls key 2 until it
/// reads 4 and then returns the value at key 1.
DemoOutcome client_demo(const DemoOptions& options = {});

/// True if `observed` (with repeats collapsed) is a subsequence of
/// [absent, 2, 4].
bool demo_progression_valid(const std::vector<std::optional<std::uint64_t>>& observed);

}  // namespace lockcouple
