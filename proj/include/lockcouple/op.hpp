#pragma once

#include <string>

#include "lockcouple/keys.hpp"

namespace lockcouple {

struct Operation {
  enum class Type : std::uint8_t { Insert, Lookup, Delete };

  Type type = Type::Lookup;
  Key key = 0;
  Value value;  // Insert only

  static Operation insert(Key k, Value v) { return {Type::Insert, k, std::move(v)}; }
  static Operation lookup(Key k) { return {Type::Lookup, k, {}}; }
  static Operation erase(Key k) { return {Type::Delete, k, {}}; }

  bool operator==(const Operation&) const = default;
  std::string to_string() const;
};

struct OpResult {
  enum class Kind : std::uint8_t { InsertDone, LookupFound, LookupAbsent, DeleteDone };

  Kind kind = Kind::InsertDone;
  Value value;  // LookupFound only

  static OpResult insert_done() { return {Kind::InsertDone, {}}; }
  static OpResult found(Value v) { return {Kind::LookupFound, std::move(v)}; }
  static OpResult absent() { return {Kind::LookupAbsent, {}}; }
  static OpResult delete_done() { return {Kind::DeleteDone, {}}; }

  bool operator==(const OpResult&) const = default;
  std::string to_string() const;
};

std::string_view to_string(Operation::Type t);
std::string_view to_string(OpResult::Kind k);

// True when `r` is a result shape `op` can produce (ignores map state).
bool result_matches_op(const Operation& op, const OpResult& r);

}  // namespace lockcouple
