#include "lockcouple/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#include "lockcouple/harness.hpp"
#include "lockcouple/linearizability.hpp"

namespace lockcouple::cli {

namespace {

struct Config {
  std::string target = "hoh";
  WorkloadSpec spec;
  std::string keys = "0:7";
  std::string mix = "40:40:20";
  bool monitor = false;
  bool jitter = false;
  std::string out;
  std::string format = "json";
  std::uint64_t iterations = 100;
  double timeout_sec = 60;
  double duration_sec = 1;
  std::string inject_bug = "none";
  std::string history_path;
};

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = spdlog::stderr_logger_mt("lockcouple");
    l->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("LOCKCOUPLE_LOG")) {
      l->set_level(spdlog::level::from_str(env));
    }
    return l;
  }();
  return log;
}

Key parse_key(std::string_view s) {
  Key v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::invalid_argument("bad key '" + std::string(s) + "'");
  }
  return v;
}

// "LO:HI"; either bound may be negative.
std::pair<Key, Key> parse_keys(std::string_view text) {
  const auto colon = text.find(':', 1);
  if (colon == std::string_view::npos) throw std::invalid_argument("keys must be LO:HI");
  return {parse_key(text.substr(0, colon)), parse_key(text.substr(colon + 1))};
}

InjectedBug parse_bug(std::string_view s) {
  if (s == "none") return InjectedBug::None;
  if (s == "release-before-acquire") return InjectedBug::ReleaseBeforeAcquire;
  throw std::invalid_argument("unknown bug '" + std::string(s) + "'");
}

// Finalizes flag values into cfg.spec; throws std::invalid_argument.
void resolve(Config& cfg) {
  std::tie(cfg.spec.key_lo, cfg.spec.key_hi) = parse_keys(cfg.keys);
  cfg.spec.mix = Mix::parse(cfg.mix);
  parse_target(cfg.target);
  parse_bug(cfg.inject_bug);
  if (cfg.format != "json" && cfg.format != "csv") throw std::invalid_argument("format must be json or csv");
  if (!(cfg.timeout_sec > 0)) throw std::invalid_argument("timeout must be positive");
  cfg.spec.validate();
}

RunOptions run_options(const Config& cfg) {
  RunOptions o;
  o.monitor = cfg.monitor;
  o.jitter = cfg.jitter;
  o.bug = parse_bug(cfg.inject_bug);
  o.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(cfg.timeout_sec * 1000));
  return o;
}

struct RunResult {
  RunOutcome outcome;
  Verdict verdict;
  int code = kOk;
  nlohmann::json report;
};

RunResult run_once(const Config& cfg, const WorkloadSpec& spec) {
  RunResult r;
  r.outcome = run_recorded(parse_target(cfg.target), spec, run_options(cfg));
  r.verdict = check(with_final_reads(r.outcome.history, r.outcome.final_contents));
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : r.outcome.violations) violations.push_back(v.to_json());
  r.report = r.verdict.to_json();
  r.report["seed"] = spec.seed;
  r.report["operations"] = r.outcome.history.operation_count();
  r.report["monitor"] = {{"enabled", cfg.monitor}, {"violations", violations}};
  r.report["reclaimed"] = r.outcome.reclaimed;
  r.report["failure"] = r.outcome.failure ? nlohmann::json(*r.outcome.failure) : nlohmann::json(nullptr);
  if (r.outcome.failure || !r.outcome.violations.empty()) {
    r.code = kMonitorFailed;
  } else if (!r.verdict.linearizable) {
    r.code = kCheckFailed;
  }
  return r;
}

int cmd_run(const Config& cfg, std::ostream& out) {
  RunResult r = run_once(cfg, cfg.spec);
  if (!cfg.out.empty()) write_atomically(cfg.out, r.outcome.history.to_jsonl());
  out << r.report.dump() << '\n';
  logger()->info("run seed={} exit={}", cfg.spec.seed, r.code);
  return r.code;
}

int cmd_fuzz(const Config& cfg, std::ostream& out) {
  const std::string dir = cfg.out.empty() ? "fuzz-failures" : cfg.out;
  for (std::uint64_t i = 0; i < cfg.iterations; ++i) {
    WorkloadSpec spec = cfg.spec;
    spec.seed = derive_seed(cfg.spec.seed, i);
    RunResult r = run_once(cfg, spec);
    logger()->debug("fuzz iteration {} seed={} exit={}", i, spec.seed, r.code);
    if (r.code != kOk) {
      std::filesystem::create_directories(dir);
      const std::string stem = dir + "/seed-" + std::to_string(spec.seed);
      r.report["spec"] = spec.to_json();
      r.report["target"] = cfg.target;
      r.report["inject_bug"] = cfg.inject_bug;
      write_atomically(stem + ".jsonl", r.outcome.history.to_jsonl());
      write_atomically(stem + ".json", r.report.dump(2) + "\n");
      out << nlohmann::json{{"iterations", i + 1},
                            {"failed", true},
                            {"seed", spec.seed},
                            {"exit", r.code},
                            {"history", stem + ".jsonl"}}
                 .dump()
          << '\n';
      return r.code;
    }
  }
  out << nlohmann::json{{"iterations", cfg.iterations}, {"failed", false}}.dump() << '\n';
  return kOk;
}

int cmd_check(const Config& cfg, std::ostream& out, std::ostream& err) {
  std::ifstream in(cfg.history_path, std::ios::binary);
  if (!in) {
    err << "cannot read " << cfg.history_path << '\n';
    return kUsage;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  History h;
  try {
    h = History::from_jsonl(buf.str());
  } catch (const HistoryError& e) {
    err << "malformed history: " << e.what() << '\n';
    return kUsage;
  }
  if (!h.complete()) logger()->warn("history has pending operations");
  const Verdict v = check(h);
  const std::string text = v.to_json().dump() + "\n";
  if (!cfg.out.empty()) write_atomically(cfg.out, text);
  out << text;
  return v.linearizable ? kOk : kCheckFailed;
}

int cmd_bench(const Config& cfg, std::ostream& out) {
  const BenchReport r = bench(parse_target(cfg.target), cfg.spec,
                              std::chrono::duration<double>(cfg.duration_sec));
  const std::string text = cfg.format == "csv" ? BenchReport::csv_header() + "\n" + r.csv_row() + "\n"
                                               : r.to_json().dump() + "\n";
  if (!cfg.out.empty()) write_atomically(cfg.out, text);
  out << text;
  return kOk;
}

int cmd_demo(const Config& cfg, std::ostream& out, std::ostream& err) {
  DemoOptions o;
  o.seed = cfg.spec.seed;
  o.jitter = cfg.jitter;
  o.monitor = cfg.monitor;
  o.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(cfg.timeout_sec * 1000));
  const DemoOutcome d = client_demo(o);
  if (d.timed_out()) {
    err << "demo timed out waiting for key 2 to reach 4\n";
    return kDemoTimeout;
  }
  out << *d.result << '\n';
  if (!d.violations.empty() || !d.progression_ok) {
    for (const auto& v : d.violations) err << v.to_json().dump() << '\n';
    if (!d.progression_ok) err << "key 2 left the absent -> 2 -> 4 progression\n";
    return kMonitorFailed;
  }
  return *d.result == 3 ? kOk : kCheckFailed;
}

void add_workload_flags(CLI::App* app, Config& cfg) {
  app->add_option("--target", cfg.target, "hoh or cg")->capture_default_str();
  app->add_option("--threads", cfg.spec.threads, "worker threads")->capture_default_str();
  app->add_option("--ops", cfg.spec.ops_per_thread, "operations per thread")->capture_default_str();
  app->add_option("--seed", cfg.spec.seed, "workload seed")->capture_default_str();
  app->add_option("--keys", cfg.keys, "inclusive key space LO:HI")->capture_default_str();
  app->add_option("--mix", cfg.mix, "insert:lookup:delete percentages")->capture_default_str();
  app->add_option("--value-len", cfg.spec.value_len, "value length in bytes")->capture_default_str();
  app->add_flag("--disjoint", cfg.spec.disjoint, "give each thread its own key slice");
  app->add_flag("--jitter", cfg.jitter, "random 0-100us pauses before lock acquisitions");
  app->add_option("--out", cfg.out, "output path");
}

}  // namespace

void write_atomically(const std::string& path, const std::string& data) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << data;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i) {
  // splitmix64 step
  std::uint64_t z = base + (i + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Hand-over-hand BST map: stress runs, history checking, benchmarks"};
  app.name("lockcouple");
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "record one concurrent run and check it");
  add_workload_flags(run, cfg);
  run->add_flag("--monitor", cfg.monitor, "attach the ghost-state monitor");
  run->add_option("--timeout-sec", cfg.timeout_sec, "abort a hung run")->capture_default_str();
  run->add_option("--inject-bug", cfg.inject_bug, "none or release-before-acquire")->capture_default_str();

  auto* fuzz = app.add_subcommand("fuzz", "repeat run with derived seeds until a failure");
  add_workload_flags(fuzz, cfg);
  fuzz->add_flag("--monitor", cfg.monitor, "attach the ghost-state monitor");
  fuzz->add_option("--iterations", cfg.iterations, "number of runs")->capture_default_str();
  fuzz->add_option("--timeout-sec", cfg.timeout_sec, "abort a hung run")->capture_default_str();
  fuzz->add_option("--inject-bug", cfg.inject_bug, "none or release-before-acquire")->capture_default_str();

  auto* chk = app.add_subcommand("check", "decide linearizability of a recorded history");
  chk->add_option("history", cfg.history_path, "JSONL history")->required();
  chk->add_option("--out", cfg.out, "write the verdict here");

  auto* bch = app.add_subcommand("bench", "measure throughput and latency");
  add_workload_flags(bch, cfg);
  bch->add_option("--format", cfg.format, "json or csv")->capture_default_str();
  bch->add_option("--duration-sec", cfg.duration_sec, "measurement time")->capture_default_str();

  auto* demo = app.add_subcommand("demo", "producer/consumer client; prints 3");
  demo->add_option("--seed", cfg.spec.seed, "jitter seed")->capture_default_str();
  demo->add_flag("--jitter", cfg.jitter, "random 0-100us pauses before lock acquisitions");
  demo->add_flag("--monitor", cfg.monitor, "attach the ghost-state monitor");
  demo->add_option("--timeout-sec", cfg.timeout_sec, "give up waiting after this long")->capture_default_str();

  std::vector<std::string> argv_store{"lockcouple"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    resolve(cfg);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*run) return cmd_run(cfg, out);
    if (*fuzz) return cmd_fuzz(cfg, out);
    if (*chk) return cmd_check(cfg, out, err);
    if (*bch) return cmd_bench(cfg, out);
    if (*demo) return cmd_demo(cfg, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "run failure: " << e.what() << '\n';
    return kMonitorFailed;
  }
  return kUsage;
}

}  // namespace lockcouple::cli
