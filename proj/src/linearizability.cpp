#include "lockcouple/linearizability.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "lockcouple/seq_oracle.hpp"

namespace lockcouple {

namespace {

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

struct OpRecord {
  Operation op;
  std::optional<OpResult> result;  // absent while pending
  std::uint64_t invoke;
  std::uint64_t ret;  // kNever while pending
};

// Pairs invokes with returns for events[0, limit).
std::vector<OpRecord> collect_ops(const std::vector<HistoryEvent>& events, std::size_t limit) {
  std::vector<OpRecord> ops;
  std::unordered_map<std::uint32_t, std::size_t> open;
  for (std::size_t i = 0; i < limit; ++i) {
    const auto& e = events[i];
    if (e.kind == HistoryEvent::Kind::Invoke) {
      open[e.tid] = ops.size();
      ops.push_back({e.op, std::nullopt, e.seq, kNever});
    } else {
      auto& rec = ops[open.at(e.tid)];
      rec.result = e.result;
      rec.ret = e.seq;
      open.erase(e.tid);
    }
  }
  return ops;
}

class Search {
 public:
  explicit Search(std::vector<OpRecord> ops) : ops_(std::move(ops)) {
    for (const auto& o : ops_) completed_ += o.result.has_value();
    words_ = (ops_.size() + 63) / 64;
  }

  std::optional<std::vector<std::size_t>> run() {
    struct Frame {
      std::vector<std::uint64_t> done;
      AbstractMap map;
      std::size_t completed_done;
      std::vector<std::size_t> candidates;
      std::size_t next = 0;
    };
    std::vector<Frame> stack;
    std::vector<std::size_t> order;
    auto push = [&](std::vector<std::uint64_t> done, AbstractMap map, std::size_t cdone) {
      Frame f{std::move(done), std::move(map), cdone, {}, 0};
      f.candidates = candidates(f.done);
      stack.push_back(std::move(f));
    };
    push(std::vector<std::uint64_t>(words_, 0), AbstractMap{}, 0);
    if (completed_ == 0) return order;

    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next == f.candidates.size()) {
        stack.pop_back();
        if (!order.empty()) order.pop_back();
        continue;
      }
      const std::size_t i = f.candidates[f.next++];
      AbstractMap map = f.map;
      OpResult r = map.apply(ops_[i].op);
      if (!accepts(ops_[i], r)) continue;
      std::vector<std::uint64_t> done = f.done;
      done[i / 64] |= 1ULL << (i % 64);
      const std::size_t cdone = f.completed_done + ops_[i].result.has_value();
      if (!memo_.insert(memo_key(done, map)).second) continue;
      order.push_back(i);
      if (cdone == completed_) return order;
      push(std::move(done), std::move(map), cdone);
    }
    return std::nullopt;
  }

 private:
  static bool accepts(const OpRecord& rec, const OpResult& r) {
    if (!rec.result) return true;  // pending: any outcome is allowed
    return *rec.result == r;
  }

  bool is_done(const std::vector<std::uint64_t>& done, std::size_t i) const {
    return (done[i / 64] >> (i % 64)) & 1U;
  }

  // Operations that may take effect next: invoked before every pending
  // operation's return.
  std::vector<std::size_t> candidates(const std::vector<std::uint64_t>& done) const {
    std::uint64_t min_ret = kNever;
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      if (!is_done(done, i)) min_ret = std::min(min_ret, ops_[i].ret);
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      if (!is_done(done, i) && ops_[i].invoke < min_ret) out.push_back(i);
    }
    return out;
  }

  static std::string memo_key(const std::vector<std::uint64_t>& done, const AbstractMap& map) {
    std::string key(reinterpret_cast<const char*>(done.data()), done.size() * 8);
    key += map.canonical();
    return key;
  }

  std::vector<OpRecord> ops_;
  std::size_t completed_ = 0;
  std::size_t words_ = 0;
  std::unordered_set<std::string> memo_;
};

bool prefix_linearizable(const History& h, std::size_t limit) {
  return Search(collect_ops(h.events(), limit)).run().has_value();
}

}  // namespace

History::History(std::vector<HistoryEvent> events) : events_(std::move(events)) {
  std::unordered_map<std::uint32_t, const Operation*> open;
  std::uint64_t last = 0;
  for (const auto& e : events_) {
    if (e.seq <= last) throw HistoryError("seq numbers not strictly increasing at " + std::to_string(e.seq));
    last = e.seq;
    auto it = open.find(e.tid);
    if (e.kind == HistoryEvent::Kind::Invoke) {
      if (it != open.end()) {
        throw HistoryError("thread " + std::to_string(e.tid) + " invoked twice without returning");
      }
      if (e.result) throw HistoryError("invoke event carries a result");
      open.emplace(e.tid, &e.op);
    } else {
      if (it == open.end()) {
        throw HistoryError("thread " + std::to_string(e.tid) + " returned without an invoke");
      }
      if (!(*it->second == e.op)) {
        throw HistoryError("return at seq " + std::to_string(e.seq) + " does not match its invoke");
      }
      if (!e.result || !result_matches_op(e.op, *e.result)) {
        throw HistoryError("return at seq " + std::to_string(e.seq) + " has no valid result");
      }
      open.erase(it);
    }
  }
  complete_ = open.empty();
}

std::size_t History::operation_count() const {
  return static_cast<std::size_t>(std::count_if(events_.begin(), events_.end(), [](const auto& e) {
    return e.kind == HistoryEvent::Kind::Invoke;
  }));
}

nlohmann::json to_json(const Operation& op) {
  nlohmann::json j{{"type", to_string(op.type)}, {"key", op.key}};
  if (op.type == Operation::Type::Insert) j["value"] = op.value.to_hex();
  return j;
}

nlohmann::json to_json(const OpResult& r) {
  nlohmann::json j{{"type", to_string(r.kind)}};
  if (r.kind == OpResult::Kind::LookupFound) j["value"] = r.value.to_hex();
  return j;
}

Operation operation_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  const Key key = j.at("key").get<Key>();
  if (type == "insert") return Operation::insert(key, Value::from_hex(j.at("value").get<std::string>()));
  if (type == "lookup") return Operation::lookup(key);
  if (type == "delete") return Operation::erase(key);
  throw HistoryError("unknown operation type '" + type + "'");
}

OpResult result_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "insert_done") return OpResult::insert_done();
  if (type == "lookup_found") return OpResult::found(Value::from_hex(j.at("value").get<std::string>()));
  if (type == "lookup_absent") return OpResult::absent();
  if (type == "delete_done") return OpResult::delete_done();
  throw HistoryError("unknown result type '" + type + "'");
}

std::string History::to_jsonl() const {
  std::string out;
  for (const auto& e : events_) {
    nlohmann::json j{{"seq", e.seq},
                     {"tid", e.tid},
                     {"kind", e.kind == HistoryEvent::Kind::Invoke ? "invoke" : "return"},
                     {"op", to_json(e.op)}};
    if (e.result) j["result"] = to_json(*e.result);
    out += j.dump();
    out += '\n';
  }
  return out;
}

History History::from_jsonl(const std::string& text) {
  std::vector<HistoryEvent> events;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      HistoryEvent e;
      e.seq = j.at("seq").get<std::uint64_t>();
      e.tid = j.at("tid").get<std::uint32_t>();
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "invoke") {
        e.kind = HistoryEvent::Kind::Invoke;
      } else if (kind == "return") {
        e.kind = HistoryEvent::Kind::Return;
      } else {
        throw HistoryError("unknown event kind '" + kind + "'");
      }
      e.op = operation_from_json(j.at("op"));
      if (j.contains("result")) e.result = result_from_json(j.at("result"));
      events.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw HistoryError("line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const std::invalid_argument& ex) {
      throw HistoryError("line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return History(std::move(events));
}

std::uint64_t Recorder::record_invoke(std::uint32_t tid, const Operation& op) {
  std::lock_guard lk(mu_);
  if (pending_.count(tid)) throw HistoryError("thread " + std::to_string(tid) + " invoked twice");
  pending_.emplace(tid, op);
  const std::uint64_t seq = next_seq_++;
  events_.push_back({tid, HistoryEvent::Kind::Invoke, op, std::nullopt, seq});
  return seq;
}

std::uint64_t Recorder::record_return(std::uint32_t tid, const OpResult& result) {
  std::lock_guard lk(mu_);
  auto it = pending_.find(tid);
  if (it == pending_.end()) {
    throw HistoryError("thread " + std::to_string(tid) + " returned without an invoke");
  }
  const std::uint64_t seq = next_seq_++;
  events_.push_back({tid, HistoryEvent::Kind::Return, std::move(it->second), result, seq});
  pending_.erase(it);
  return seq;
}

History Recorder::history() const {
  std::lock_guard lk(mu_);
  return History(events_);
}

nlohmann::json Verdict::to_json() const {
  nlohmann::json j{{"linearizable", linearizable}};
  j["witness"] = witness ? nlohmann::json(*witness) : nlohmann::json(nullptr);
  j["violation_prefix"] = violation_prefix ? nlohmann::json(*violation_prefix) : nlohmann::json(nullptr);
  return j;
}

Verdict check(const History& h) {
  auto ops = collect_ops(h.events(), h.events().size());
  std::vector<std::uint64_t> invokes;
  for (const auto& o : ops) invokes.push_back(o.invoke);
  if (auto order = Search(std::move(ops)).run()) {
    Verdict v{true, std::vector<std::uint64_t>{}, std::nullopt};
    for (std::size_t i : *order) v.witness->push_back(invokes[i]);
    return v;
  }
  // Non-linearizability is preserved by extension, so bisect on prefix length.
  std::size_t lo = 0;                  // linearizable
  std::size_t hi = h.events().size();  // not linearizable
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (prefix_linearizable(h, mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {false, std::nullopt, hi};
}

Verdict brute_force_check(const History& h) {
  if (!h.complete()) throw HistoryError("brute force requires a complete history");
  auto ops = collect_ops(h.events(), h.events().size());
  if (ops.size() > kBruteForceLimit) {
    throw HistoryError("brute force limited to " + std::to_string(kBruteForceLimit) + " operations");
  }
  std::vector<std::size_t> perm(ops.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (std::size_t a = 0; ok && a < perm.size(); ++a) {
      for (std::size_t b = a + 1; ok && b < perm.size(); ++b) {
        // perm[b] placed after perm[a]: perm[b] must not have returned before perm[a] began.
        if (ops[perm[b]].ret < ops[perm[a]].invoke) ok = false;
      }
    }
    if (!ok) continue;
    AbstractMap m;
    for (std::size_t i : perm) {
      if (!(m.apply(ops[i].op) == *ops[i].result)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      Verdict v{true, std::vector<std::uint64_t>{}, std::nullopt};
      for (std::size_t i : perm) v.witness->push_back(ops[i].invoke);
      return v;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {false, std::nullopt, std::nullopt};
}

bool witness_valid(const History& h, const std::vector<std::uint64_t>& witness) {
  auto ops = collect_ops(h.events(), h.events().size());
  std::unordered_map<std::uint64_t, std::size_t> by_invoke;
  for (std::size_t i = 0; i < ops.size(); ++i) by_invoke[ops[i].invoke] = i;
  std::vector<bool> used(ops.size(), false);
  std::vector<std::size_t> order;
  for (auto seq : witness) {
    auto it = by_invoke.find(seq);
    if (it == by_invoke.end() || used[it->second]) return false;
    used[it->second] = true;
    order.push_back(it->second);
  }
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (!used[i] && ops[i].result) return false;  // completed ops must appear
  }
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (ops[order[b]].ret < ops[order[a]].invoke) return false;
    }
  }
  AbstractMap m;
  for (std::size_t i : order) {
    OpResult r = m.apply(ops[i].op);
    if (ops[i].result && !(r == *ops[i].result)) return false;
  }
  return true;
}

}  // namespace lockcouple
