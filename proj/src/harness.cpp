#include "lockcouple/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <latch>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include "lockcouple/cg_map.hpp"
#include "lockcouple/jitter.hpp"

namespace lockcouple {

namespace {

std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t worker, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(worker), static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

unsigned parse_unsigned(std::string_view s) {
  unsigned v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

// Keys available to `worker`: the whole space, or its slice when disjoint.
std::pair<Key, Key> key_slice(const WorkloadSpec& spec, unsigned worker) {
  if (!spec.disjoint) return {spec.key_lo, spec.key_hi};
  const auto width = static_cast<std::uint64_t>(spec.key_hi - spec.key_lo) + 1;
  const std::uint64_t per = width / spec.threads;
  const Key lo = spec.key_lo + static_cast<Key>(per * worker);
  const Key hi = worker + 1 == spec.threads ? spec.key_hi : lo + static_cast<Key>(per) - 1;
  return {lo, hi};
}

class OpSource {
 public:
  OpSource(const WorkloadSpec& spec, unsigned worker)
      : spec_(spec), rng_(stream_for(spec.seed, worker, 0x6f7073)), keys_(key_slice(spec, worker)) {}

  Operation next() {
    const Key k = std::uniform_int_distribution<Key>(keys_.first, keys_.second)(rng_);
    const unsigned roll = std::uniform_int_distribution<unsigned>(0, 99)(rng_);
    if (roll < spec_.mix.insert) {
      std::vector<std::uint8_t> bytes(spec_.value_len);
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng_());
      return Operation::insert(k, Value(std::move(bytes)));
    }
    if (roll < spec_.mix.insert + spec_.mix.lookup) return Operation::lookup(k);
    return Operation::erase(k);
  }

 private:
  const WorkloadSpec& spec_;
  std::mt19937_64 rng_;
  std::pair<Key, Key> keys_;
};

using AnyMap = std::variant<std::unique_ptr<HohMap>, std::unique_ptr<CgMap>>;

AnyMap make_map(Target target, GhostMonitor* monitor, const Jitter* jitter, InjectedBug bug) {
  if (target == Target::Hoh) return std::make_unique<HohMap>(HohMap::Options{monitor, jitter, bug});
  if (bug != InjectedBug::None) throw std::invalid_argument("bug injection applies to hoh only");
  return std::make_unique<CgMap>(CgMap::Options{monitor, jitter});
}

OpResult apply_op(AnyMap& m, const Operation& op) {
  return std::visit([&](auto& p) { return p->apply(op); }, m);
}

std::size_t count_kind(const std::vector<Violation>& vs, std::string_view kind) {
  return static_cast<std::size_t>(
      std::count_if(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == kind; }));
}

// Quiescent check, then destroy. Appends every violation to `out`.
void finish_monitored(AnyMap& m, GhostMonitor& mon, RunOutcome& out) {
  QuiescentReport report = std::visit([&](auto& p) { return mon.quiescent_check(p->live_view()); }, m);
  bool destroyed_ok = true;
  try {
    std::visit([](auto& p) { p->destroy(); }, m);
  } catch (const LedgerIncomplete&) {
    destroyed_ok = false;  // already in mon.violations()
  }
  out.violations = mon.violations();
  out.violations.insert(out.violations.end(), report.violations.begin(), report.violations.end());
  out.leaked_ids = count_kind(out.violations, "leaked-id") + mon.registry_size() + mon.ledger_size();
  out.reclaimed = destroyed_ok && mon.ledger_size() == 0;
}

}  // namespace

std::string_view to_string(Target t) { return t == Target::Hoh ? "hoh" : "cg"; }

Target parse_target(std::string_view s) {
  if (s == "hoh") return Target::Hoh;
  if (s == "cg") return Target::Cg;
  throw std::invalid_argument("unknown target '" + std::string(s) + "' (expected hoh or cg)");
}

Mix Mix::parse(std::string_view text) {
  std::vector<unsigned> parts;
  std::size_t start = 0;
  for (;;) {
    const auto colon = text.find(':', start);
    parts.push_back(parse_unsigned(text.substr(start, colon - start)));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3) throw std::invalid_argument("mix must be I:L:D");
  if (parts[0] + parts[1] + parts[2] != 100) {
    throw std::invalid_argument("mix percentages must sum to 100");
  }
  return {parts[0], parts[1], parts[2]};
}

std::string Mix::to_string() const {
  return std::to_string(insert) + ":" + std::to_string(lookup) + ":" + std::to_string(erase);
}

void WorkloadSpec::validate() const {
  if (mix.insert + mix.lookup + mix.erase != 100) {
    throw std::invalid_argument("mix percentages must sum to 100");
  }
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  if (ops_per_thread < 1) throw std::invalid_argument("ops per thread must be at least 1");
  if (key_lo > key_hi) throw std::invalid_argument("empty key space");
  if (value_len > Value::kDefaultMaxLen) {
    throw std::invalid_argument("value length exceeds " + std::to_string(Value::kDefaultMaxLen));
  }
  if (disjoint && static_cast<std::uint64_t>(key_hi - key_lo) + 1 < threads) {
    throw std::invalid_argument("disjoint partitions need at least one key per thread");
  }
}

nlohmann::json WorkloadSpec::to_json() const {
  return {{"seed", seed},   {"threads", threads},        {"ops_per_thread", ops_per_thread},
          {"key_lo", key_lo}, {"key_hi", key_hi},         {"mix", mix.to_string()},
          {"value_len", value_len}, {"disjoint", disjoint}};
}

std::vector<std::vector<Operation>> generate(const WorkloadSpec& spec) {
  spec.validate();
  std::vector<std::vector<Operation>> out(spec.threads);
  for (unsigned t = 0; t < spec.threads; ++t) {
    OpSource src(spec, t);
    out[t].reserve(spec.ops_per_thread);
    for (unsigned i = 0; i < spec.ops_per_thread; ++i) out[t].push_back(src.next());
  }
  return out;
}

AbstractMap sequential_outcome(const WorkloadSpec& spec) {
  AbstractMap m;
  for (const auto& ops : generate(spec)) {
    for (const auto& op : ops) m.apply(op);
  }
  return m;
}

History with_final_reads(const History& h, const AbstractMap& final_state) {
  std::vector<HistoryEvent> events = h.events();
  std::set<Key> keys;
  std::uint32_t tid = 0;
  std::uint64_t seq = 0;
  for (const auto& e : events) {
    keys.insert(e.op.key);
    tid = std::max(tid, e.tid);
    seq = std::max(seq, e.seq);
  }
  for (const auto& [k, _] : final_state.bindings()) keys.insert(k);
  ++tid;
  for (Key k : keys) {
    const auto op = Operation::lookup(k);
    const auto v = final_state.get(k);
    events.push_back({tid, HistoryEvent::Kind::Invoke, op, std::nullopt, ++seq});
    events.push_back({tid, HistoryEvent::Kind::Return, op, v ? OpResult::found(*v) : OpResult::absent(), ++seq});
  }
  return History(std::move(events));
}

RunOutcome run_recorded(Target target, const WorkloadSpec& spec, const RunOptions& options) {
  const auto plan = generate(spec);
  std::optional<GhostMonitor> monitor;
  if (options.monitor) monitor.emplace(GhostMonitor::Policy::Collect);
  std::optional<Jitter> jitter;
  if (options.jitter) jitter.emplace(spec.seed ^ 0x6a6974746572ULL, options.max_pause);
  AnyMap map = make_map(target, monitor ? &*monitor : nullptr, jitter ? &*jitter : nullptr,
                        options.bug);

  Recorder recorder;
  std::mutex mu;
  std::condition_variable cv;
  unsigned finished = 0;
  std::optional<std::string> failure;
  std::latch start(spec.threads);

  std::vector<std::thread> workers;
  workers.reserve(spec.threads);
  for (unsigned t = 0; t < spec.threads; ++t) {
    workers.emplace_back([&, t] {
      if (jitter) jitter->bind_this_thread(t);
      start.arrive_and_wait();
      try {
        for (const auto& op : plan[t]) {
          recorder.record_invoke(t + 1, op);
          OpResult r = apply_op(map, op);
          recorder.record_return(t + 1, r);
        }
      } catch (const std::exception& e) {
        std::lock_guard lk(mu);
        if (!failure) failure = "worker " + std::to_string(t + 1) + ": " + e.what();
      }
      std::lock_guard lk(mu);
      ++finished;
      cv.notify_all();
    });
  }

  if (options.timeout) {
    std::unique_lock lk(mu);
    if (!cv.wait_for(lk, *options.timeout, [&] { return finished == spec.threads; })) {
      std::cerr << nlohmann::json{{"run_failure", "timeout"},
                                  {"timeout_ms", options.timeout->count()},
                                  {"spec", spec.to_json()}}
                       .dump()
                << std::endl;
      std::_Exit(3);
    }
  }
  for (auto& w : workers) w.join();

  RunOutcome out;
  out.failure = failure;
  out.history = recorder.history();
  out.final_contents = std::visit([](auto& p) { return p->contents(); }, map);
  if (monitor) {
    finish_monitored(map, *monitor, out);
  } else {
    std::visit([](auto& p) { p->destroy(); }, map);
    out.reclaimed = true;
  }
  return out;
}

nlohmann::json BenchReport::to_json() const {
  return {{"target", to_string(target)},
          {"threads", spec.threads},
          {"ops", ops},
          {"mix", spec.mix.to_string()},
          {"seconds", seconds},
          {"throughput", throughput},
          {"p50_ns", p50_ns},
          {"p99_ns", p99_ns},
          {"seed", spec.seed},
          {"spec", spec.to_json()}};
}

std::string BenchReport::csv_header() { return "target,threads,ops,mix,throughput,p50_ns,p99_ns,seed"; }

std::string BenchReport::csv_row() const {
  std::ostringstream os;
  os << to_string(target) << ',' << spec.threads << ',' << ops << ',' << spec.mix.to_string() << ','
     << static_cast<std::uint64_t>(throughput) << ',' << p50_ns << ',' << p99_ns << ',' << spec.seed;
  return os.str();
}

BenchReport bench(Target target, const WorkloadSpec& spec, std::chrono::duration<double> duration) {
  spec.validate();
  AnyMap map = make_map(target, nullptr, nullptr, InjectedBug::None);

  // Shuffled prefill keeps the unbalanced tree from degenerating into a list.
  {
    const auto width = static_cast<std::uint64_t>(spec.key_hi - spec.key_lo) + 1;
    const std::uint64_t n = std::min<std::uint64_t>(width, 1U << 20);
    std::vector<Key> keys(n);
    for (std::uint64_t i = 0; i < n; ++i) keys[i] = spec.key_lo + static_cast<Key>(i * (width / n));
    auto rng = stream_for(spec.seed, 0, 0x70726566);
    std::shuffle(keys.begin(), keys.end(), rng);
    keys.resize((n + 1) / 2);
    for (Key k : keys) apply_op(map, Operation::insert(k, Value(std::vector<std::uint8_t>(spec.value_len))));
  }

  std::vector<std::vector<std::uint32_t>> latencies(spec.threads);
  std::atomic<bool> stop{false};
  std::latch start(spec.threads + 1);
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < spec.threads; ++t) {
    workers.emplace_back([&, t] {
      OpSource src(spec, t);
      auto& lat = latencies[t];
      lat.reserve(1U << 20);
      start.arrive_and_wait();
      while (!stop.load(std::memory_order_relaxed)) {
        Operation op = src.next();
        const auto t0 = std::chrono::steady_clock::now();
        apply_op(map, op);
        const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        lat.push_back(static_cast<std::uint32_t>(std::min<std::int64_t>(ns, UINT32_MAX)));
      }
    });
  }
  start.arrive_and_wait();
  const auto begin = std::chrono::steady_clock::now();
  std::this_thread::sleep_for(duration);
  stop = true;
  for (auto& w : workers) w.join();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();

  std::vector<std::uint32_t> all;
  for (auto& l : latencies) all.insert(all.end(), l.begin(), l.end());
  BenchReport r;
  r.target = target;
  r.spec = spec;
  r.ops = all.size();
  r.seconds = secs;
  r.throughput = secs > 0 ? static_cast<double>(r.ops) / secs : 0;
  if (!all.empty()) {
    auto quantile = [&](double q) {
      const auto idx = static_cast<std::size_t>(q * static_cast<double>(all.size() - 1));
      std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(idx), all.end());
      return static_cast<std::uint64_t>(all[idx]);
    };
    r.p50_ns = quantile(0.50);
    r.p99_ns = quantile(0.99);
  }
  std::visit([](auto& p) { p->destroy(); }, map);
  return r;
}

bool demo_progression_valid(const std::vector<std::optional<std::uint64_t>>& observed) {
  static const std::optional<std::uint64_t> kStates[] = {std::nullopt, 2, 4};
  std::size_t at = 0;
  for (const auto& v : observed) {
    while (at < 3 && kStates[at] != v) ++at;
    if (at == 3) return false;
  }
  return true;
}

DemoOutcome client_demo(const DemoOptions& options) {
  std::optional<GhostMonitor> monitor;
  if (options.monitor) monitor.emplace(GhostMonitor::Policy::Collect);
  std::optional<Jitter> jitter;
  if (options.jitter) jitter.emplace(options.seed, options.max_pause);
  auto map = std::make_unique<HohMap>(
      HohMap::Options{monitor ? &*monitor : nullptr, jitter ? &*jitter : nullptr, InjectedBug::None});

  DemoOutcome out;
  std::thread producer([&] {
    if (jitter) jitter->bind_this_thread(1);
    map->insert(1, Value::from_u64_le(1));
    map->insert(2, Value::from_u64_le(2));
    map->insert(1, Value::from_u64_le(3));
    map->insert(2, Value::from_u64_le(4));
  });

  std::thread consumer([&] {
    if (jitter) jitter->bind_this_thread(2);
    const auto deadline = std::chrono::steady_clock::now() + options.timeout;
    for (;;) {
      OpResult r = map->lookup(2);
      std::optional<std::uint64_t> v;
      if (r.kind == OpResult::Kind::LookupFound) v = r.value.to_u64_le();
      if (out.observed.empty() || out.observed.back() != v) out.observed.push_back(v);
      if (v == 4U) break;
      if (std::chrono::steady_clock::now() > deadline) return;
      std::this_thread::yield();
    }
    OpResult r1 = map->lookup(1);
    if (r1.kind == OpResult::Kind::LookupFound) out.result = r1.value.to_u64_le();
  });

  producer.join();
  consumer.join();
  out.final_contents = map->contents();
  out.progression_ok = demo_progression_valid(out.observed);

  if (monitor) {
    // The ghost map's own history of key 2 must follow the same three states.
    std::vector<std::optional<std::uint64_t>> ghost_states{std::nullopt};
    for (const auto& rec : monitor->log()) {
      if (rec.op.type == Operation::Type::Insert && rec.op.key == 2) {
        std::optional<std::uint64_t> v = rec.op.value.to_u64_le();
        if (ghost_states.back() != v) ghost_states.push_back(v);
      }
    }
    if (!demo_progression_valid(ghost_states)) out.progression_ok = false;

    RunOutcome tmp;
    AnyMap any = std::move(map);
    finish_monitored(any, *monitor, tmp);
    out.violations = std::move(tmp.violations);
  }
  return out;
}

}  // namespace lockcouple
