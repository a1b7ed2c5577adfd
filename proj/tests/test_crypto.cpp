#include <gtest/gtest.h>

#include "ovnet/crypto/hash.hpp"
#include "ovnet/crypto/merkle.hpp"
#include "ovnet/crypto/sign.hpp"
#include "ovnet/rng.hpp"

using namespace ovnet;
using namespace ovnet::crypto;

namespace {

Bytes random_bytes(Rng& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng.below(256));
  return b;
}

std::vector<Digest> leaves(std::size_t n) {
  std::vector<Digest> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(hash("leaf" + std::to_string(i)));
  return v;
}

}  // namespace

TEST(Hash, KnownVectors) {
  EXPECT_EQ(hash(std::string_view("")).hex(), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(hash(std::string_view("abc")).hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(hash(std::string_view("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")).hex(),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(Hash, SingleBitFlipsChangeDigest) {
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    auto m = random_bytes(rng, 1 + rng.below(200));
    const auto d = hash(m);
    m[rng.below(m.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
    EXPECT_NE(hash(m), d);
  }
}

TEST(Hash, HexRoundTrip) {
  const auto d = hash(std::string_view("x"));
  EXPECT_EQ(Digest::from_hex(d.hex()), d);
  EXPECT_THROW(Digest::from_hex("zz"), FormatError);
}

TEST(Sign, Rfc8032Vector1) {
  const auto seed = from_hex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60");
  const auto pub = from_hex("d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
  Bytes sk = seed;
  sk.insert(sk.end(), pub.begin(), pub.end());
  const auto kp = KeyPair::from_secret(sk);
  EXPECT_EQ(kp.verifying_key().hex(), to_hex(pub));
  const auto sig = sign(kp, {});
  EXPECT_EQ(to_hex(sig.bytes),
            "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");
  EXPECT_TRUE(verify_sig(kp.verifying_key(), {}, sig));
}

TEST(Sign, DeterministicFromSeed) {
  const auto a = KeyPair::from_seed(5), b = KeyPair::from_seed(5), c = KeyPair::from_seed(6);
  EXPECT_EQ(a.verifying_key(), b.verifying_key());
  EXPECT_NE(a.verifying_key(), c.verifying_key());
  const Bytes msg{1, 2, 3};
  EXPECT_EQ(sign(a, msg), sign(b, msg));
}

TEST(Sign, MutationFuzz) {
  Rng rng(2);
  const auto kp = KeyPair::from_seed(9);
  const auto other = KeyPair::from_seed(10);
  for (int t = 0; t < 200; ++t) {
    auto msg = random_bytes(rng, 1 + rng.below(100));
    auto sig = sign(kp, msg);
    ASSERT_TRUE(verify_sig(kp.verifying_key(), msg, sig));
    EXPECT_FALSE(verify_sig(other.verifying_key(), msg, sig));
    auto m2 = msg;
    m2[rng.below(m2.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    EXPECT_FALSE(verify_sig(kp.verifying_key(), m2, sig));
    sig.bytes[rng.below(kSignatureBytes)] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    EXPECT_FALSE(verify_sig(kp.verifying_key(), msg, sig));
  }
}

TEST(Sign, MalformedLengthsThrow) {
  const Bytes short_key(31, 0), sig(64, 0), msg;
  EXPECT_THROW(verify_sig(short_key, msg, sig), FormatError);
  EXPECT_THROW(verify_sig(Bytes(32, 0), msg, Bytes(63, 0)), FormatError);
}

TEST(Merkle, EveryProofChecks) {
  for (std::size_t n = 1; n <= 17; ++n) {
    MerkleTree t(leaves(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = t.prove(i);
      EXPECT_TRUE(merkle_check(p)) << n << "/" << i;
      EXPECT_EQ(p.root, t.root());
      EXPECT_EQ(MerkleProof::deserialize(p.serialize()), p);
    }
  }
}

// Every single-byte change to leaf, sibling, root, direction flag or index
// must be rejected.
TEST(Merkle, ExhaustiveMutation) {
  for (std::size_t n : {2u, 3u, 5u, 8u, 9u}) {
    MerkleTree t(leaves(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = t.prove(i);
      for (std::size_t b = 0; b < 32; ++b) {
        auto q = p;
        q.leaf.bytes[b] ^= 0x01;
        EXPECT_FALSE(merkle_check(q));
        q = p;
        q.root.bytes[b] ^= 0x80;
        EXPECT_FALSE(merkle_check(q));
        for (std::size_t s = 0; s < p.path.size(); ++s) {
          q = p;
          q.path[s].sibling.bytes[b] ^= 0x10;
          EXPECT_FALSE(merkle_check(q)) << n << "/" << i << " step " << s;
        }
      }
      for (std::size_t s = 0; s < p.path.size(); ++s) {
        auto q = p;
        q.path[s].sibling_on_left = !q.path[s].sibling_on_left;
        EXPECT_FALSE(merkle_check(q));
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        auto q = p;
        q.leaf_index = j;
        EXPECT_FALSE(merkle_check(q)) << n << " index " << i << "->" << j;
      }
    }
  }
}

TEST(Merkle, EmptyTreeRejected) { EXPECT_THROW(MerkleTree({}), InvalidParameter); }
