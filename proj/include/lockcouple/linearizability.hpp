#pragma once

// Recording of concurrent histories and a linearizability decision procedure
// against the sequential map.

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lockcouple/op.hpp"

namespace lockcouple {

struct HistoryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct HistoryEvent {
  enum class Kind : std::uint8_t { Invoke, Return };

  std::uint32_t tid = 0;
  Kind kind = Kind::Invoke;
  Operation op;
  std::optional<OpResult> result;  // Return only
  std::uint64_t seq = 0;

  bool operator==(const HistoryEvent&) const = default;
};

class History {
 public:
  History() = default;
  /// Validates seq order and per-thread alternation; throws HistoryError.
  explicit History(std::vector<HistoryEvent> events);

  const std::vector<HistoryEvent>& events() const { return events_; }
  bool complete() const { return complete_; }
  std::size_t operation_count() const;

  /// One JSON object per line.
  std::string to_jsonl() const;
  static History from_jsonl(const std::string& text);

  bool operator==(const History& o) const { return events_ == o.events_; }

 private:
  std::vector<HistoryEvent> events_;
  bool complete_ = true;
};

/// Thread-safe history recorder; seq numbers come from one global counter.
class Recorder {
 public:
  std::uint64_t record_invoke(std::uint32_t tid, const Operation& op);
  std::uint64_t record_return(std::uint32_t tid, const OpResult& result);
  History history() const;

 private:
  mutable std::mutex mu_;
  std::uint64_t next_seq_ = 1;
  std::vector<HistoryEvent> events_;
  std::unordered_map<std::uint32_t, Operation> pending_;
};

struct Verdict {
  bool linearizable = false;
  // Invoke seq of each operation, in linearization order.
  std::optional<std::vector<std::uint64_t>> witness;
  // Length (in events) of the shortest non-linearizable prefix.
  std::optional<std::size_t> violation_prefix;

  nlohmann::json to_json() const;
};

/// Backtracking search over real-time-respecting orders, memoized on
/// (linearized set, map state). Histories may contain pending operations,
/// which can be linearized anywhere after their invocation or dropped.
Verdict check(const History& h);

/// Exhaustive enumeration for complete histories of at most
/// kBruteForceLimit operations.
inline constexpr std::size_t kBruteForceLimit = 8;
Verdict brute_force_check(const History& h);

/// True if `witness` respects real-time order and replays every result.
bool witness_valid(const History& h, const std::vector<std::uint64_t>& witness);

nlohmann::json to_json(const Operation& op);
nlohmann::json to_json(const OpResult& r);
Operation operation_from_json(const nlohmann::json& j);
OpResult result_from_json(const nlohmann::json& j);

}  // namespace lockcouple
