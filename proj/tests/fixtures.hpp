#pragma once

// Trees and range labels taken from the worked examples the design follows.

#include <map>
#include <string>
#include <vector>

#include "lockcouple/seq_oracle.hpp"

namespace lockcouple::testing {

inline Value val(std::uint64_t x) { return Value::from_u64_le(x); }

// 20 / (15, 30 / (25, 50 / (45 / (40 / (35)))))
inline const std::vector<Key>& range_figure_keys() {
  static const std::vector<Key> keys{20, 15, 30, 25, 50, 45, 40, 35};
  return keys;
}

inline AbstractTree range_figure_tree() {
  return tree_from_insertions(range_figure_keys(), [](Key k) { return val(static_cast<std::uint64_t>(k)); });
}

// Range label of every keyed node in the range figure.
inline const std::map<Key, std::string>& range_figure_labels() {
  static const std::map<Key, std::string> labels{
      {20, "(-inf,+inf)"}, {15, "(-inf,20)"}, {30, "(20,+inf)"}, {25, "(20,30)"},
      {50, "(30,+inf)"},   {45, "(30,50)"},   {40, "(30,45)"},   {35, "(30,40)"},
  };
  return labels;
}

// Leaf labels of the range figure, left to right.
inline const std::vector<std::string>& range_figure_leaf_labels() {
  static const std::vector<std::string> labels{
      "(-inf,15)", "(15,20)", "(20,25)", "(25,30)", "(30,35)", "(35,40)", "(40,45)", "(45,50)", "(50,+inf)",
  };
  return labels;
}

// 30 / (25, 75 / (40 / (35, 55 / (50, 60)), 80))
inline const std::vector<Key>& delete_figure_keys() {
  static const std::vector<Key> keys{30, 25, 75, 40, 80, 35, 55, 50, 60};
  return keys;
}

inline const std::map<Key, std::string>& delete_figure_state1() {
  static const std::map<Key, std::string> labels{
      {30, "(-inf,+inf)"}, {25, "(-inf,30)"}, {75, "(30,+inf)"}, {40, "(30,75)"}, {35, "(30,40)"},
      {55, "(40,75)"},     {50, "(40,55)"},   {60, "(55,75)"},   {80, "(75,+inf)"},
  };
  return labels;
}

// After rotating 55 above 40.
inline const std::map<Key, std::string>& delete_figure_state2() {
  static const std::map<Key, std::string> labels{
      {30, "(-inf,+inf)"}, {25, "(-inf,30)"}, {75, "(30,+inf)"}, {55, "(30,75)"}, {40, "(30,55)"},
      {35, "(30,40)"},     {50, "(40,55)"},   {60, "(55,75)"},   {80, "(75,+inf)"},
  };
  return labels;
}

// After rotating 50 above 40. Node 35 keeps (30,40): rotations only touch the
// rotated pair.
inline const std::map<Key, std::string>& delete_figure_state3() {
  static const std::map<Key, std::string> labels{
      {30, "(-inf,+inf)"}, {25, "(-inf,30)"}, {75, "(30,+inf)"}, {55, "(30,75)"}, {50, "(30,55)"},
      {40, "(30,50)"},     {35, "(30,40)"},   {60, "(55,75)"},   {80, "(75,+inf)"},
  };
  return labels;
}

inline std::map<Key, std::string> render(const std::map<Key, KeyRange>& ranges) {
  std::map<Key, std::string> out;
  for (const auto& [k, r] : ranges) out.emplace(k, r.to_string());
  return out;
}

}  // namespace lockcouple::testing
