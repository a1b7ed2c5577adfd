#pragma once

#include <array>
#include <compare>
#include <string>

#include "ovnet/common.hpp"

namespace ovnet::crypto {

/// 32-byte SHA-256 digest.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  ByteView view() const { return bytes; }
  std::string hex() const { return to_hex(bytes); }
  static Digest from_hex(std::string_view hex);
  static Digest from_bytes(ByteView b);

  auto operator<=>(const Digest&) const = default;
};

Digest hash(ByteView message);
inline Digest hash(std::string_view s) {
  return hash(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace ovnet::crypto
