#include "lockcouple/share_ledger.hpp"

#include <atomic>

namespace lockcouple {

ThreadTag this_thread_tag() {
  static std::atomic<ThreadTag> next{1};
  thread_local const ThreadTag tag = next.fetch_add(1, std::memory_order_relaxed);
  return tag;
}

std::string HolderTag::to_string() const {
  switch (kind) {
    case Kind::SelfInvariant:
      return "self";
    case Kind::ParentInvariant:
      return "parent";
    case Kind::RootBox:
      return "rootbox";
    case Kind::Thread:
      return "thread:" + std::to_string(tid);
  }
  return "?";
}

void ShareLedger::seed(LockId lock, bool is_root) {
  if (contains(lock)) throw LedgerError(lock, "seeded twice");
  auto& h = table_[lock];
  h[HolderTag::self()] = self_share();
  h[is_root ? HolderTag::root_box() : HolderTag::parent()] = parent_share();
}

ShareLedger::Holdings& ShareLedger::entry(LockId lock) {
  auto it = table_.find(lock);
  if (it == table_.end()) throw LedgerError(lock, "unknown lock");
  return it->second;
}

const ShareLedger::Holdings& ShareLedger::entry(LockId lock) const {
  auto it = table_.find(lock);
  if (it == table_.end()) throw LedgerError(lock, "unknown lock");
  return it->second;
}

void ShareLedger::transfer(LockId lock, HolderTag from, HolderTag to, Share amount) {
  auto& h = entry(lock);
  auto it = h.find(from);
  if (amount <= Share(0) || it == h.end() || it->second < amount) {
    Share have = it == h.end() ? Share(0) : it->second;
    throw LedgerError(lock, "insufficient share: " + from.to_string() + " holds " +
                                std::to_string(have.numerator()) + "/" +
                                std::to_string(have.denominator()) + ", asked " +
                                std::to_string(amount.numerator()) + "/" +
                                std::to_string(amount.denominator()));
  }
  it->second -= amount;
  if (it->second == Share(0)) h.erase(it);
  h[to] += amount;
}

Share ShareLedger::held(LockId lock, HolderTag holder) const {
  const auto& h = entry(lock);
  auto it = h.find(holder);
  return it == h.end() ? Share(0) : it->second;
}

void ShareLedger::reclaim(LockId lock, HolderTag holder) {
  const auto& h = entry(lock);
  if (h.size() != 1 || h.begin()->first != holder || h.begin()->second != Share(1)) {
    throw LedgerError(lock, "cannot reclaim: " + holder.to_string() + " does not own the full share");
  }
  table_.erase(lock);
}

void ShareLedger::assemble_and_reclaim(LockId lock) {
  auto& h = entry(lock);
  Share total = 0;
  for (const auto& [holder, share] : h) {
    if (holder.kind == HolderTag::Kind::Thread) {
      throw LedgerError(lock, "share still owned by " + holder.to_string());
    }
    total += share;
  }
  if (total != Share(1)) throw LedgerError(lock, "shares do not assemble to 1");
  table_.erase(lock);
}

std::vector<LockId> ShareLedger::locks() const {
  std::vector<LockId> out;
  out.reserve(table_.size());
  for (const auto& [lock, _] : table_) out.push_back(lock);
  return out;
}

std::vector<LockId> ShareLedger::unbalanced() const {
  std::vector<LockId> out;
  for (const auto& [lock, h] : table_) {
    Share total = 0;
    for (const auto& [_, s] : h) total += s;
    if (total != Share(1)) out.push_back(lock);
  }
  return out;
}

std::vector<LockId> ShareLedger::thread_held() const {
  std::vector<LockId> out;
  for (const auto& [lock, h] : table_) {
    for (const auto& [holder, _] : h) {
      if (holder.kind == HolderTag::Kind::Thread) {
        out.push_back(lock);
        break;
      }
    }
  }
  return out;
}

}  // namespace lockcouple
