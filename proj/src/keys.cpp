#include "lockcouple/keys.hpp"

#include <charconv>

namespace lockcouple {

std::string Bound::to_string() const {
  switch (kind_) {
    case Kind::NegInf:
      return "-inf";
    case Kind::PosInf:
      return "+inf";
    case Kind::Finite:
      break;
  }
  return std::to_string(key_);
}

KeyRange::KeyRange(Bound lower, Bound upper) : lower_(lower), upper_(upper) {
  if (!(lower_ < upper_)) {
    throw std::invalid_argument("empty key range (" + lower_.to_string() + "," +
                                upper_.to_string() + ")");
  }
}

std::string KeyRange::to_string() const {
  return "(" + lower_.to_string() + "," + upper_.to_string() + ")";
}

namespace {

Bound parse_bound(std::string_view s) {
  if (s == "-inf") return Bound::neg_inf();
  if (s == "+inf" || s == "inf") return Bound::pos_inf();
  Key k = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), k);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad bound: " + std::string(s));
  }
  return Bound::finite(k);
}

}  // namespace

KeyRange KeyRange::parse(std::string_view text) {
  if (text.size() < 5 || text.front() != '(' || text.back() != ')') {
    throw std::invalid_argument("bad range: " + std::string(text));
  }
  auto body = text.substr(1, text.size() - 2);
  auto comma = body.find(',');
  if (comma == std::string_view::npos) throw std::invalid_argument("bad range: " + std::string(text));
  return {parse_bound(body.substr(0, comma)), parse_bound(body.substr(comma + 1))};
}

Value Value::from_u64_le(std::uint64_t v) {
  std::vector<std::uint8_t> bytes(8);
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return Value(std::move(bytes));
}

std::uint64_t Value::to_u64_le() const {
  if (bytes_.size() != 8) throw std::invalid_argument("value is not an 8-byte integer");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[i];
  return v;
}

std::string Value::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes_.size() * 2);
  for (auto b : bytes_) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

Value Value::from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex value");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument(std::string("bad hex digit '") + c + "'");
  };
  std::vector<std::uint8_t> bytes(hex.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return Value(std::move(bytes));
}

std::uint64_t Value::digest() const {
  return fnv1a({reinterpret_cast<const char*>(bytes_.data()), bytes_.size()});
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lockcouple
