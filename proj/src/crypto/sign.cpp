#include "ovnet/crypto/sign.hpp"

#include <sodium.h>

#include "ovnet/crypto/hash.hpp"

namespace ovnet::crypto {

namespace {
struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  }
};
void ensure_sodium() { static SodiumInit once; }
}  // namespace

VerifyingKey VerifyingKey::from_bytes(ByteView b) {
  if (b.size() != kPublicKeyBytes) throw FormatError("verifying key must be 32 bytes");
  VerifyingKey k;
  std::copy(b.begin(), b.end(), k.bytes.begin());
  return k;
}

Signature Signature::from_bytes(ByteView b) {
  if (b.size() != kSignatureBytes) throw FormatError("signature must be 64 bytes");
  Signature s;
  std::copy(b.begin(), b.end(), s.bytes.begin());
  return s;
}

KeyPair KeyPair::from_seed(std::uint64_t seed) {
  ensure_sodium();
  ByteWriter w;
  w.str("ovnet-ed25519-seed");
  w.u64(seed);
  const Digest d = hash(w.bytes());
  KeyPair kp;
  crypto_sign_seed_keypair(kp.vk_.bytes.data(), kp.sk_.data(), d.bytes.data());
  return kp;
}

KeyPair KeyPair::from_secret(ByteView secret) {
  ensure_sodium();
  if (secret.size() != kSecretKeyBytes) throw FormatError("secret key must be 64 bytes");
  KeyPair kp;
  std::copy(secret.begin(), secret.end(), kp.sk_.begin());
  crypto_sign_ed25519_sk_to_pk(kp.vk_.bytes.data(), kp.sk_.data());
  return kp;
}

Signature sign(const KeyPair& kp, ByteView message) {
  ensure_sodium();
  Signature s;
  crypto_sign_detached(s.bytes.data(), nullptr, message.data(), message.size(), kp.secret().data());
  return s;
}

bool verify_sig(const VerifyingKey& vk, ByteView message, const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(), vk.bytes.data()) == 0;
}

bool verify_sig(ByteView vk, ByteView message, ByteView sig) {
  return verify_sig(VerifyingKey::from_bytes(vk), message, Signature::from_bytes(sig));
}

}  // namespace ovnet::crypto
