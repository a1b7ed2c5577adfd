#include "ovnet/crypto/merkle.hpp"

namespace ovnet::crypto {

Digest merkle_node(const Digest& left, const Digest& right) {
  Bytes buf;
  buf.reserve(65);
  buf.push_back(0x01);
  buf.insert(buf.end(), left.bytes.begin(), left.bytes.end());
  buf.insert(buf.end(), right.bytes.begin(), right.bytes.end());
  return hash(buf);
}

MerkleTree::MerkleTree(std::vector<Digest> leaves) {
  if (leaves.empty()) throw InvalidParameter("merkle tree needs at least one leaf");
  levels_.push_back(std::move(leaves));
  while (levels_.back().size() > 1) {
    const auto& cur = levels_.back();
    std::vector<Digest> next;
    next.reserve((cur.size() + 1) / 2);
    for (std::size_t i = 0; i < cur.size(); i += 2) {
      const Digest& right = i + 1 < cur.size() ? cur[i + 1] : cur[i];
      next.push_back(merkle_node(cur[i], right));
    }
    levels_.push_back(std::move(next));
  }
}

MerkleProof MerkleTree::prove(std::size_t index) const {
  if (index >= leaf_count())
    throw RangeError("leaf index " + std::to_string(index) + " out of range for " +
                     std::to_string(leaf_count()) + " leaves");
  MerkleProof p;
  p.leaf_index = index;
  p.leaf = levels_.front()[index];
  p.root = root();
  std::size_t pos = index;
  for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
    const auto& level = levels_[l];
    if (pos % 2 == 0) {
      p.path.push_back({pos + 1 < level.size() ? level[pos + 1] : level[pos], false});
    } else {
      p.path.push_back({level[pos - 1], true});
    }
    pos /= 2;
  }
  return p;
}

bool merkle_check(const MerkleProof& proof) {
  if (proof.path.size() >= 64) return false;
  if (proof.leaf_index >> proof.path.size() != 0) return false;
  Digest cur = proof.leaf;
  for (std::size_t l = 0; l < proof.path.size(); ++l) {
    const auto& step = proof.path[l];
    const bool index_says_left = ((proof.leaf_index >> l) & 1) != 0;
    if (step.sibling_on_left != index_says_left) return false;
    cur = step.sibling_on_left ? merkle_node(step.sibling, cur) : merkle_node(cur, step.sibling);
  }
  return cur == proof.root;
}

Bytes MerkleProof::serialize() const {
  ByteWriter w;
  w.u64(leaf_index);
  w.raw(leaf.view());
  w.u32(static_cast<std::uint32_t>(path.size()));
  for (const auto& s : path) {
    w.u8(s.sibling_on_left ? 1 : 0);
    w.raw(s.sibling.view());
  }
  w.raw(root.view());
  return std::move(w).take();
}

MerkleProof MerkleProof::deserialize(ByteView b) {
  ByteReader r(b);
  MerkleProof p;
  p.leaf_index = r.u64();
  p.leaf = Digest::from_bytes(r.raw(32));
  const auto n = r.u32();
  if (n > 64) throw FormatError("merkle path too long");
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto flag = r.u8();
    if (flag > 1) throw FormatError("bad merkle side flag");
    p.path.push_back({Digest::from_bytes(r.raw(32)), flag == 1});
  }
  p.root = Digest::from_bytes(r.raw(32));
  r.expect_done();
  return p;
}

}  // namespace ovnet::crypto
