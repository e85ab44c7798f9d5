#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lockcouple {

using Key = std::int64_t;
using NodeId = std::uint64_t;

inline constexpr NodeId kNoNode = 0;

/// An extended key: -inf, a finite key, or +inf.
class Bound {
 public:
  enum class Kind : std::uint8_t { NegInf = 0, Finite = 1, PosInf = 2 };

  static constexpr Bound neg_inf() { return Bound(Kind::NegInf, 0); }
  static constexpr Bound pos_inf() { return Bound(Kind::PosInf, 0); }
  static constexpr Bound finite(Key k) { return Bound(Kind::Finite, k); }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_finite() const { return kind_ == Kind::Finite; }
  constexpr Key key() const { return key_; }

  constexpr std::strong_ordering operator<=>(const Bound& o) const {
    if (kind_ != o.kind_) return kind_ <=> o.kind_;
    if (kind_ == Kind::Finite) return key_ <=> o.key_;
    return std::strong_ordering::equal;
  }
  constexpr bool operator==(const Bound& o) const { return (*this <=> o) == 0; }

  constexpr std::strong_ordering operator<=>(Key k) const { return *this <=> finite(k); }
  constexpr bool operator==(Key k) const { return *this == finite(k); }

  std::string to_string() const;

 private:
  constexpr Bound(Kind kind, Key key) : kind_(kind), key_(kind == Kind::Finite ? key : 0) {}

  Kind kind_;
  Key key_;
};

/// Open interval (lower, upper) over extended keys. lower < upper always.
class KeyRange {
 public:
  KeyRange(Bound lower, Bound upper);

  static KeyRange full() { return {Bound::neg_inf(), Bound::pos_inf()}; }

  const Bound& lower() const { return lower_; }
  const Bound& upper() const { return upper_; }

  bool contains(Key k) const { return lower_ < k && upper_ > k; }
  // Interval containment: every key of `inner` is a key of *this.
  bool contains(const KeyRange& inner) const {
    return lower_ <= inner.lower_ && inner.upper_ <= upper_;
  }

  // Child ranges for a node holding `k` with this range.
  KeyRange left_of(Key k) const { return {lower_, Bound::finite(k)}; }
  KeyRange right_of(Key k) const { return {Bound::finite(k), upper_}; }

  bool operator==(const KeyRange&) const = default;

  /// Renders as "(-inf,35)" / "(35,+inf)".
  std::string to_string() const;
  static KeyRange parse(std::string_view text);

 private:
  Bound lower_;
  Bound upper_;
};

/// Opaque byte payload. Equality is byte-wise.
class Value {
 public:
  static constexpr std::size_t kDefaultMaxLen = 64;

  Value() = default;
  explicit Value(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  static Value from_u64_le(std::uint64_t v);
  static Value from_hex(std::string_view hex);

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }

  // Decodes an 8-byte little-endian integer; throws if size() != 8.
  std::uint64_t to_u64_le() const;
  std::string to_hex() const;
  std::uint64_t digest() const;

  auto operator<=>(const Value&) const = default;

 private:
  std::vector<std::uint8_t> bytes_;
};

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace lockcouple
