#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ovnet/common.hpp"
#include "ovnet/crypto/hash.hpp"
#include "ovnet/crypto/sign.hpp"

namespace ovnet::ledger {

using crypto::Digest;
using crypto::KeyPair;
using crypto::Signature;
using crypto::VerifyingKey;

struct LedgerEntry {
  std::uint64_t seq = 0;
  VerifyingKey author;
  Bytes payload;
  Signature sig;

  /// The signed bytes: u64 seq (LE) followed by the payload.
  Bytes signed_message() const;
  bool operator==(const LedgerEntry&) const = default;
};

// Payload tags. Every payload starts with one of these.
enum class RecordTag : std::uint8_t { Ownership = 0x01, OvRequest = 0x02, Vote = 0x03, Anchor = 0x04 };

/// <time || hash(key) || hash(verify) || hash(info)>, 104 bytes, time as u64 LE.
struct OwnershipRecord {
  std::uint64_t time = 0;
  Digest h_key;
  Digest h_verify;
  Digest h_info;

  static constexpr std::size_t kSize = 8 + 3 * 32;
  Bytes serialize() const;
  static OwnershipRecord deserialize(ByteView b);
  bool operator==(const OwnershipRecord&) const = default;
};

struct OvRequestRecord {
  Digest request;      // digest of the broadcast <M || key || verify> message
  Digest h_verify;
  bool operator==(const OvRequestRecord&) const = default;
};

struct VoteRecord {
  Digest request;
  bool bit = false;
  bool operator==(const VoteRecord&) const = default;
};

/// A Merkle root committed for a batch of evidence (federated runs).
struct AnchorRecord {
  Digest root;
  std::uint32_t leaves = 0;
  bool operator==(const AnchorRecord&) const = default;
};

Bytes encode(const OwnershipRecord& r);
Bytes encode(const OvRequestRecord& r);
Bytes encode(const VoteRecord& r);
Bytes encode(const AnchorRecord& r);
RecordTag payload_tag(ByteView payload);
OwnershipRecord decode_ownership(ByteView payload);
OvRequestRecord decode_ov_request(ByteView payload);
VoteRecord decode_vote(ByteView payload);
AnchorRecord decode_anchor(ByteView payload);

struct AuditResult {
  bool ok = true;
  std::optional<std::size_t> bad_entry;  // position in the log
  std::string reason;
  explicit operator bool() const { return ok; }
};

/// The totally ordered log. Membership is enforced by Community; Ledger only
/// checks signatures and sequence density.
class Ledger {
 public:
  Ledger() = default;
  /// No checks; audit() reports whatever is wrong.
  static Ledger from_entries(std::vector<LedgerEntry> entries);

  std::uint64_t next_seq() const { return entries_.size(); }
  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const LedgerEntry& at(std::uint64_t seq) const;

  /// Signs and appends.
  const LedgerEntry& append(const KeyPair& author, ByteView payload);
  /// Appends an externally signed entry. Throws SignatureError or FormatError
  /// (bad seq) and leaves the log unchanged.
  const LedgerEntry& accept(LedgerEntry e);

  /// Seq of the earliest ownership record with this verifier digest.
  std::optional<std::uint64_t> lookup_timestamp(const Digest& h_verify) const;
  /// Seqs of every ownership record with this verifier digest.
  std::vector<std::uint64_t> lookup_all(const Digest& h_verify) const;

  AuditResult audit() const;

  Bytes export_binary() const;
  static Ledger import_binary(ByteView b);
  std::string export_jsonl() const;
  static Ledger import_jsonl(std::string_view text);

  /// Storage cost of the entries (seq, author, payload, signature), without
  /// the export header and length prefixes.
  std::uint64_t byte_size() const;

 private:
  std::vector<LedgerEntry> entries_;
};

struct Agent {
  VerifyingKey id;
  std::uint64_t credits = 0;
  bool honest = true;
  bool voter = false;
};

class VoteTally {
 public:
  VoteTally(Digest request, std::size_t electorate, double quorum);

  /// One vote per agent; a second vote throws InvalidParameter.
  void cast(const VerifyingKey& agent, bool bit);
  std::size_t yes() const;
  std::size_t no() const;
  std::size_t participation() const { return votes_.size(); }
  bool quorate() const;
  /// nullopt = inconclusive (below quorum, or a tie).
  std::optional<bool> outcome() const;

  const Digest& request() const { return request_; }
  const std::map<VerifyingKey, bool>& votes() const { return votes_; }

 private:
  Digest request_;
  std::size_t electorate_;
  double quorum_;
  std::map<VerifyingKey, bool> votes_;
};

struct CommunityConfig {
  double quorum = 0.5;            // participation must exceed this fraction of voters
  std::uint64_t ov_fee = 1;
  std::uint64_t endowment = 10;   // credits granted to each participant on registration
};

/// The verification community: participants, accounts and the shared log.
class Community {
 public:
  explicit Community(CommunityConfig cfg = {}) : cfg_(cfg) {}

  void register_participant(const VerifyingKey& id, bool voter = false, bool honest = true);
  bool is_participant(const VerifyingKey& id) const { return agents_.contains(id); }
  const Agent& agent(const VerifyingKey& id) const;
  std::vector<VerifyingKey> voters() const;

  /// Throws RegistrationError for unregistered authors.
  const LedgerEntry& append(const KeyPair& author, ByteView payload);
  const LedgerEntry& accept(LedgerEntry e);

  std::optional<std::uint64_t> lookup_timestamp(const Digest& h_verify) const {
    return log_.lookup_timestamp(h_verify);
  }
  AuditResult audit() const { return log_.audit(); }

  VoteTally open_tally(const Digest& request) const;
  /// Throws CreditError if the initiator cannot pay.
  void charge_fee(const VerifyingKey& initiator);
  /// +1 to every agent whose vote matches the outcome. Returns credits minted.
  std::uint64_t settle(const VoteTally& tally);

  std::uint64_t minted() const { return minted_; }
  std::uint64_t burned() const { return burned_; }
  std::uint64_t total_credits() const;
  const CommunityConfig& config() const { return cfg_; }
  const Ledger& log() const { return log_; }

 private:
  CommunityConfig cfg_;
  Ledger log_;
  std::map<VerifyingKey, Agent> agents_;
  std::uint64_t minted_ = 0;
  std::uint64_t burned_ = 0;
};

}  // namespace ovnet::ledger
