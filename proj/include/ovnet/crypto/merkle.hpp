#pragma once

#include <vector>

#include "ovnet/crypto/hash.hpp"

namespace ovnet::crypto {

// Binary Merkle tree over leaf digests. Interior nodes are
// SHA-256(0x01 || left || right). A level with an odd node count is padded by
// duplicating its last node.

struct MerkleStep {
  Digest sibling;
  bool sibling_on_left = false;
  bool operator==(const MerkleStep&) const = default;
};

struct MerkleProof {
  std::uint64_t leaf_index = 0;
  Digest leaf;
  std::vector<MerkleStep> path;
  Digest root;

  Bytes serialize() const;
  static MerkleProof deserialize(ByteView b);
  bool operator==(const MerkleProof&) const = default;
};

class MerkleTree {
 public:
  explicit MerkleTree(std::vector<Digest> leaves);

  const Digest& root() const { return levels_.back().front(); }
  std::size_t leaf_count() const { return levels_.front().size(); }
  const std::vector<Digest>& leaves() const { return levels_.front(); }
  std::size_t depth() const { return levels_.size() - 1; }

  MerkleProof prove(std::size_t index) const;

 private:
  std::vector<std::vector<Digest>> levels_;
};

Digest merkle_node(const Digest& left, const Digest& right);

inline MerkleTree merkle_build(std::vector<Digest> leaves) { return MerkleTree(std::move(leaves)); }
inline MerkleProof merkle_prove(const MerkleTree& t, std::size_t index) { return t.prove(index); }
/// Recomputes the root from leaf and path; flags must agree with leaf_index bits.
bool merkle_check(const MerkleProof& proof);

}  // namespace ovnet::crypto
