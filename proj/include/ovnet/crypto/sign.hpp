#pragma once

#include <array>
#include <cstdint>

#include "ovnet/common.hpp"

namespace ovnet::crypto {

// Ed25519 (RFC 8032). Signatures are deterministic, so replaying a ledger
// reproduces it byte for byte.
inline constexpr std::size_t kPublicKeyBytes = 32;
inline constexpr std::size_t kSecretKeyBytes = 64;
inline constexpr std::size_t kSignatureBytes = 64;

struct VerifyingKey {
  std::array<std::uint8_t, kPublicKeyBytes> bytes{};
  ByteView view() const { return bytes; }
  std::string hex() const { return to_hex(bytes); }
  static VerifyingKey from_bytes(ByteView b);
  auto operator<=>(const VerifyingKey&) const = default;
};

struct Signature {
  std::array<std::uint8_t, kSignatureBytes> bytes{};
  ByteView view() const { return bytes; }
  static Signature from_bytes(ByteView b);
  auto operator<=>(const Signature&) const = default;
};

class KeyPair {
 public:
  /// Derives the key pair from a 64-bit seed (expanded through SHA-256).
  static KeyPair from_seed(std::uint64_t seed);
  /// Expects the 64-byte libsodium secret key layout (seed || public key).
  static KeyPair from_secret(ByteView secret);

  const VerifyingKey& verifying_key() const { return vk_; }
  ByteView secret() const { return sk_; }

 private:
  std::array<std::uint8_t, kSecretKeyBytes> sk_{};
  VerifyingKey vk_;
};

Signature sign(const KeyPair& kp, ByteView message);
bool verify_sig(const VerifyingKey& vk, ByteView message, const Signature& sig);
/// Byte-level entry point; malformed lengths throw FormatError.
bool verify_sig(ByteView vk, ByteView message, ByteView sig);

}  // namespace ovnet::crypto
