#include "ovnet/crypto/hash.hpp"

#include <sodium.h>

namespace ovnet::crypto {

Digest hash(ByteView message) {
  Digest d;
  crypto_hash_sha256(d.bytes.data(), message.data(), message.size());
  return d;
}

Digest Digest::from_bytes(ByteView b) {
  if (b.size() != 32) throw FormatError("digest must be 32 bytes");
  Digest d;
  std::copy(b.begin(), b.end(), d.bytes.begin());
  return d;
}

Digest Digest::from_hex(std::string_view hex) { return from_bytes(ovnet::from_hex(hex)); }

}  // namespace ovnet::crypto
