#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ovnet/crypto/merkle.hpp"
#include "ovnet/crypto/sign.hpp"
#include "ovnet/ledger/ledger.hpp"
#include "ovnet/nn/dataset.hpp"
#include "ovnet/nn/model.hpp"
#include "ovnet/nn/train.hpp"
#include "ovnet/wm/scheme.hpp"

namespace ovnet::fed {

enum class Combinator { average };

struct FlConfig {
  int n_clients = 8;            // K
  int rounds = 5;
  nn::TrainConfig local_cfg{5, 0.05, 32, 0};  // per client, per round
  nn::TrainConfig embed_cfg{80, 0.05, 32, 0}; // aggregator embedding (epochs is the cap)
  Combinator combinator = Combinator::average;
  bool watermark = true;         // false: plain federated averaging (control run)
  bool rotate_surveillance = false;
  std::uint64_t seed = 0;
  wm::SchemeId wm_scheme = wm::SchemeId::ParamEmbed;  // scheme of every Merkle-Sign key
  wm::SchemeConfig scheme;

  void validate() const;
};

struct ClientSlot {
  int index = 0;  // 1..K; the aggregator is leaf 0
  wm::WatermarkKey key;
  wm::WatermarkKey surv_key;
  wm::Verifier surv_verifier;
  crypto::KeyPair kp;
  nn::Dataset data;
};

struct RoundRecord {
  int round = 0;
  double global_accuracy = 0.0;           // after aggregation, on the evaluation set
  std::vector<double> embed_times_ms;     // per client, timing only
  std::vector<nn::Model> distributed;     // model copy sent to each client this round
};

struct FlState {
  FlConfig cfg;
  nn::ArchDescriptor arch;
  nn::Model global;
  nn::Dataset aggregator_data;
  nn::Dataset eval;
  wm::WatermarkKey key0;
  crypto::KeyPair aggregator_kp;
  std::vector<ClientSlot> clients;
  std::vector<RoundRecord> rounds;
  int round = 0;
};

/// Splits `train` into an aggregator shard plus K client shards and draws all
/// keys. key_0, the owner keys and the surveillance keys use disjoint positions.
FlState fl_init(const nn::Model& init, const nn::Dataset& train, const nn::Dataset& eval, const FlConfig& cfg);

/// One Merkle-Sign round: per client, embed key_0 and key_k† into a copy of
/// the global model, train locally, then average.
void fl_round(FlState& state);

/// Canonical bytes of (key_k, verifier_k, k).
Bytes evidence_bytes(const wm::WatermarkKey& key, const wm::Verifier& verifier, std::uint32_t k);

struct EvidenceTree {
  crypto::MerkleTree tree;
  std::vector<Bytes> evidence;              // leaf k's evidence bytes
  std::vector<crypto::MerkleProof> proofs;
};

struct FinalizeResult {
  nn::Model model;
  std::vector<wm::Verifier> verifiers;  // [0] aggregator, [k] client k
  EvidenceTree evidence;
  ledger::LedgerEntry anchor;     // AnchorRecord with the Merkle root
  ledger::LedgerEntry ownership;  // OwnershipRecord for key_0, h_info = root
};

/// Embeds key_0..key_K into the final model and commits the evidence root.
/// The aggregator must be a registered participant of `community`.
/// Throws CapacityError naming the first key that fails to embed or verify.
FinalizeResult fl_finalize(const FlState& state, ledger::Community& community);

/// The unique client whose surveillance key verifies on `leaked`, or nullopt.
/// Several hits throw AmbiguityError.
std::optional<int> trace_traitor(const nn::Model& leaked, std::span<const ClientSlot> slots);

/// Client `impostor` presents its own key as the evidence at `victim`'s leaf.
/// True means the false claim was accepted (Merkle path and model check both pass).
bool falsification_accepted(const FinalizeResult& fin, const nn::Model& model, const ClientSlot& impostor, int victim);

struct IncompleteRecovery : Error {
  IncompleteRecovery(const std::string& what, std::vector<std::size_t> missing)
      : Error(what), missing(std::move(missing)) {}
  std::vector<std::size_t> missing;
};

struct RecoveredProof {
  int client = 0;
  crypto::MerkleProof proof;
  bool valid = false;                       // proof checks and its root is anchored
  std::optional<std::uint64_t> anchor_seq;  // seq of the anchor record holding the root
};

/// Rebuilds the evidence tree from the evidence every party holds (the
/// client's own plus its peers') and re-derives client k's path against the
/// root committed on the ledger. A missing leaf throws IncompleteRecovery.
RecoveredProof recover_proof(const ledger::Ledger& log, int k, std::span<const std::optional<Bytes>> evidence);

struct AggregatableReport {
  wm::SchemeId scheme = wm::SchemeId::ParamEmbed;
  int n_owners = 0;
  int trials = 0;
  double epsilon = 0.05;
  std::vector<double> pass_rate;  // per owner
  bool aggregatable = false;      // every pass rate >= 1 - epsilon
};

/// Each owner embeds its own key into its own copy of `base` using its own
/// shard of `data`; the copies are averaged and every owner verifies.
AggregatableReport check_aggregatable(wm::SchemeId scheme, int n_owners, int trials, const nn::Model& base,
                                      const nn::Dataset& data, const nn::TrainConfig& embed_cfg,
                                      const wm::SchemeConfig& scfg, std::uint64_t seed, double epsilon = 0.05);

/// Elementwise mean of the parameter vectors.
nn::Model average(std::span<const nn::Model> models);

}  // namespace ovnet::fed
