#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ovnet/ledger/ledger.hpp"
#include "ovnet/nn/model.hpp"
#include "ovnet/wm/scheme.hpp"

namespace ovnet::protocols {

using ledger::Community;
using ledger::LedgerEntry;

/// Signed <M || key || verify>, broadcast in the clear.
struct OvRequest {
  crypto::VerifyingKey owner;
  Bytes model;
  Bytes key;
  Bytes verifier;
  crypto::Signature sig;

  Bytes message() const;
  crypto::Digest digest() const { return crypto::hash(message()); }
  std::size_t wire_size() const { return message().size() + 32 + 64; }
};

OvRequest make_ov_request(const crypto::KeyPair& owner, const nn::Model& model, const wm::WatermarkKey& key,
                          const wm::Verifier& verifier);
bool check_request(const OvRequest& r);

struct OvResult {
  crypto::Digest request;
  std::optional<bool> verdict;  // nullopt = inconclusive
  std::size_t yes = 0;
  std::size_t no = 0;
  std::size_t electorate = 0;
  std::map<crypto::VerifyingKey, bool> votes;
  std::optional<std::uint64_t> timestamp;  // earliest ownership record for hash(verify)
  bool anchored = false;
  std::uint64_t traffic_bytes = 0;  // request bytes times the agents that downloaded it
  std::uint64_t minted = 0;
};

struct SimAgent {
  crypto::KeyPair kp;
  bool honest = true;
};

struct NetworkConfig {
  ledger::CommunityConfig community;
  std::size_t agents = 5;
  std::size_t malicious = 0;   // the last `malicious` agents invert their votes
  double participation = 1.0;  // chance an agent volunteers for a request
  std::uint64_t seed = 0;
};

/// The community plus the simulated agents and the public broadcast channel.
class Network {
 public:
  explicit Network(const NetworkConfig& cfg);

  Community& community() { return community_; }
  const Community& community() const { return community_; }
  const std::vector<SimAgent>& agents() const { return agents_; }
  const NetworkConfig& config() const { return cfg_; }

  void add_participant(const crypto::VerifyingKey& id) { community_.register_participant(id); }

  void broadcast(OvRequest r) { broadcasts_.push_back(std::move(r)); }
  const std::vector<OvRequest>& broadcasts() const { return broadcasts_; }

 private:
  NetworkConfig cfg_;
  Community community_;
  std::vector<SimAgent> agents_;
  std::vector<OvRequest> broadcasts_;
};

/// hash(info) for a commit: the architecture and the owner's verifying key.
crypto::Digest info_digest(const nn::ArchDescriptor& arch, const crypto::VerifyingKey& owner);

LedgerEntry decentral_commit(Community& community, const crypto::KeyPair& owner, const wm::WatermarkKey& key,
                             const wm::Verifier& verifier, const nn::ArchDescriptor& arch);

OvResult decentral_ov(Network& net, const crypto::KeyPair& owner, const nn::Model& model, const wm::WatermarkKey& key,
                      const wm::Verifier& verifier);

struct Evidence {
  wm::WatermarkKey key;
  wm::Verifier verifier;
};

Evidence eavesdrop_capture(const OvRequest& request);

struct Claim {
  crypto::VerifyingKey claimant;
  wm::WatermarkKey key;
  wm::Verifier verifier;
};

struct ClaimStatus {
  bool verifies = false;
  std::optional<std::uint64_t> timestamp;
  bool own_record = false;  // the earliest record was authored by the claimant for this key
};

struct DisputeRuling {
  std::optional<std::size_t> winner;  // index into the claims
  std::vector<ClaimStatus> claims;
};

/// Earliest-record-wins among claims whose watermark verifies on `model`.
DisputeRuling resolve_dispute(const ledger::Ledger& log, const nn::Model& model, std::span<const Claim> claims);

}  // namespace ovnet::protocols
