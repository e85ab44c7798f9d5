#include "lockcouple/op.hpp"

namespace lockcouple {

std::string_view to_string(Operation::Type t) {
  switch (t) {
    case Operation::Type::Insert:
      return "insert";
    case Operation::Type::Lookup:
      return "lookup";
    case Operation::Type::Delete:
      return "delete";
  }
  return "?";
}

std::string_view to_string(OpResult::Kind k) {
  switch (k) {
    case OpResult::Kind::InsertDone:
      return "insert_done";
    case OpResult::Kind::LookupFound:
      return "lookup_found";
    case OpResult::Kind::LookupAbsent:
      return "lookup_absent";
    case OpResult::Kind::DeleteDone:
      return "delete_done";
  }
  return "?";
}

std::string Operation::to_string() const {
  std::string s(lockcouple::to_string(type));
  s += "(" + std::to_string(key);
  if (type == Type::Insert) s += "," + value.to_hex();
  return s + ")";
}

std::string OpResult::to_string() const {
  std::string s(lockcouple::to_string(kind));
  if (kind == Kind::LookupFound) s += "(" + value.to_hex() + ")";
  return s;
}

bool result_matches_op(const Operation& op, const OpResult& r) {
  switch (op.type) {
    case Operation::Type::Insert:
      return r.kind == OpResult::Kind::InsertDone;
    case Operation::Type::Lookup:
      return r.kind == OpResult::Kind::LookupFound || r.kind == OpResult::Kind::LookupAbsent;
    case Operation::Type::Delete:
      return r.kind == OpResult::Kind::DeleteDone;
  }
  return false;
}

}  // namespace lockcouple
