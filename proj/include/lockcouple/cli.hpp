#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lockcouple::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kCheckFailed = 2,    // non-linearizable history, or demo returned the wrong value
  kMonitorFailed = 3,  // monitor violation or run failure; wins over kCheckFailed
  kDemoTimeout = 4,
};

/// Entry point for the `lockcouple` tool. `args` excludes the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Writes `data` to a temporary sibling of `path` and renames it into place.
void write_atomically(const std::string& path, const std::string& data);

/// Seed of fuzz iteration `i` derived from the base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t i);

}  // namespace lockcouple::cli
