#include "ovnet/fedwm/merkle_sign.hpp"

#include "ovnet/rng.hpp"

namespace ovnet::fed {

namespace {

nn::TrainConfig seeded(nn::TrainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

bool verifies(const nn::Model& m, const wm::WatermarkKey& k, const wm::Verifier& v) {
  try {
    return wm::verify(m, k, v);
  } catch (const BindingError&) {
    return false;
  }
}

std::vector<wm::WatermarkKey> all_keys(const FlState& s) {
  std::vector<wm::WatermarkKey> keys{s.key0};
  for (const auto& c : s.clients) {
    keys.push_back(c.key);
    keys.push_back(c.surv_key);
  }
  return keys;
}

}  // namespace

void FlConfig::validate() const {
  if (n_clients < 2) throw InvalidParameter("federated runs need K >= 2 clients");
  if (rounds < 1) throw InvalidParameter("rounds must be positive");
  if (local_cfg.epochs < 0 || embed_cfg.epochs < 1) throw InvalidParameter("bad epoch counts");
}

nn::Model average(std::span<const nn::Model> models) {
  if (models.empty()) throw InvalidParameter("nothing to average");
  nn::Model out = models.front();
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (!(models[i].arch == out.arch)) throw ShapeError("averaged models must share an architecture");
    out.params += models[i].params;
  }
  out.params /= static_cast<double>(models.size());
  return out;
}

FlState fl_init(const nn::Model& init, const nn::Dataset& train, const nn::Dataset& eval, const FlConfig& cfg) {
  cfg.validate();
  nn::check_model(init);
  FlState s;
  s.cfg = cfg;
  s.arch = init.arch;
  s.global = init;
  s.eval = eval;
  s.aggregator_kp = crypto::KeyPair::from_seed(derive_seed(cfg.seed, {0xa66}));

  auto shards = nn::partition(train, cfg.n_clients + 1, derive_seed(cfg.seed, {0x5a4d}));
  for (const auto& sh : shards)
    if (sh.size() < cfg.local_cfg.batch_size || sh.size() < cfg.embed_cfg.batch_size)
      throw InvalidParameter("data shard smaller than a batch; use fewer clients or more data");
  s.aggregator_data = shards[0];

  const auto N = cfg.scheme.security_bits;
  std::vector<wm::WatermarkKey> taken;
  auto draw = [&](std::uint64_t tag, std::uint64_t k) {
    auto key = wm::gen(cfg.wm_scheme, N, s.arch, derive_seed(cfg.seed, {tag, k}), cfg.scheme, taken);
    taken.push_back(key);
    return key;
  };
  s.key0 = draw(0x0e0, 0);
  for (int k = 1; k <= cfg.n_clients; ++k) {
    ClientSlot c;
    c.index = k;
    c.key = draw(0x0e1, k);
    c.surv_key = draw(0x0e2, k);
    c.surv_verifier = wm::make_verifier(c.surv_key, s.arch, cfg.scheme);
    c.kp = crypto::KeyPair::from_seed(derive_seed(cfg.seed, {0xc1, static_cast<std::uint64_t>(k)}));
    c.data = shards[static_cast<std::size_t>(k)];
    s.clients.push_back(std::move(c));
  }
  return s;
}

void fl_round(FlState& s) {
  if (s.round >= s.cfg.rounds) throw InvalidParameter("all rounds already ran");
  const auto r = static_cast<std::uint64_t>(s.round);
  if (s.cfg.watermark && s.cfg.rotate_surveillance && s.round > 0) {
    auto taken = all_keys(s);
    for (auto& c : s.clients) {
      c.surv_key = wm::gen(s.cfg.wm_scheme, s.cfg.scheme.security_bits, s.arch,
                           derive_seed(s.cfg.seed, {0x0e3, r, static_cast<std::uint64_t>(c.index)}), s.cfg.scheme, taken);
      c.surv_verifier = wm::make_verifier(c.surv_key, s.arch, s.cfg.scheme);
      taken.push_back(c.surv_key);
    }
  }

  RoundRecord rec;
  rec.round = s.round;
  std::vector<nn::Model> local;
  for (const auto& c : s.clients) {
    const auto k = static_cast<std::uint64_t>(c.index);
    nn::Model sent = s.global;
    double ms = 0.0;
    if (s.cfg.watermark) {
      const wm::WatermarkKey pair[2] = {s.key0, c.surv_key};
      wm::EmbedManyResult e;
      try {
        e = wm::embed_many(sent, pair, s.aggregator_data, seeded(s.cfg.embed_cfg, derive_seed(s.cfg.seed, {0xeb, r, k})),
                           s.cfg.scheme);
      } catch (const EmbedFailure& err) {
        throw EmbedFailure("round " + std::to_string(s.round) + ", client " + std::to_string(c.index) + ": " + err.what(),
                           static_cast<std::size_t>(c.index));
      }
      sent = std::move(e.model);
      for (double t : e.embed_times_ms) ms += t;
    }
    rec.embed_times_ms.push_back(ms);
    rec.distributed.push_back(sent);
    local.push_back(nn::train(std::move(sent), c.data, seeded(s.cfg.local_cfg, derive_seed(s.cfg.seed, {0x7a, r, k}))));
  }
  s.global = average(local);
  rec.global_accuracy = nn::accuracy(s.global, s.eval);
  s.rounds.push_back(std::move(rec));
  ++s.round;
}

Bytes evidence_bytes(const wm::WatermarkKey& key, const wm::Verifier& verifier, std::uint32_t k) {
  ByteWriter w;
  w.str("ovnet-evidence");
  w.blob(key.serialize());
  w.blob(verifier.serialize());
  w.u32(k);
  return std::move(w).take();
}

FinalizeResult fl_finalize(const FlState& s, ledger::Community& community) {
  if (s.round < s.cfg.rounds) throw InvalidParameter("finalize before all rounds completed");
  std::vector<wm::WatermarkKey> keys{s.key0};
  for (const auto& c : s.clients) keys.push_back(c.key);

  wm::EmbedManyResult e;
  try {
    e = wm::embed_many(s.global, keys, s.aggregator_data, seeded(s.cfg.embed_cfg, derive_seed(s.cfg.seed, {0xf1})),
                       s.cfg.scheme);
  } catch (const EmbedFailure& err) {
    throw CapacityError("final embedding failed at key " + std::to_string(err.index) + ": " + err.what());
  }
  for (std::size_t k = 0; k < keys.size(); ++k)
    if (!wm::verify(e.model, keys[k], e.verifiers[k]))
      throw CapacityError("key " + std::to_string(k) + " no longer verifies after the final embedding");

  std::vector<Bytes> evidence;
  std::vector<crypto::Digest> leaves;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    evidence.push_back(evidence_bytes(keys[k], e.verifiers[k], static_cast<std::uint32_t>(k)));
    leaves.push_back(crypto::hash(evidence.back()));
  }
  crypto::MerkleTree tree(leaves);
  std::vector<crypto::MerkleProof> proofs;
  for (std::size_t k = 0; k < keys.size(); ++k) proofs.push_back(tree.prove(k));

  const auto anchor = community.append(
      s.aggregator_kp, ledger::encode(ledger::AnchorRecord{tree.root(), static_cast<std::uint32_t>(keys.size())}));
  ledger::OwnershipRecord rec;
  rec.time = community.log().next_seq();
  rec.h_key = s.key0.digest();
  rec.h_verify = e.verifiers[0].digest();
  rec.h_info = tree.root();
  const auto own = community.append(s.aggregator_kp, ledger::encode(rec));

  return {std::move(e.model), std::move(e.verifiers), {std::move(tree), std::move(evidence), std::move(proofs)}, anchor,
          own};
}

std::optional<int> trace_traitor(const nn::Model& leaked, std::span<const ClientSlot> slots) {
  std::vector<std::size_t> hits;
  for (const auto& c : slots)
    if (wm::verify(leaked, c.surv_key, c.surv_verifier)) hits.push_back(static_cast<std::size_t>(c.index));
  if (hits.size() > 1) throw AmbiguityError("several surveillance keys verify on the leaked model", hits);
  if (hits.empty()) return std::nullopt;
  return static_cast<int>(hits.front());
}

bool falsification_accepted(const FinalizeResult& fin, const nn::Model& model, const ClientSlot& impostor, int victim) {
  const auto v = static_cast<std::size_t>(victim);
  const auto& own_verifier = fin.verifiers.at(static_cast<std::size_t>(impostor.index));
  const auto& root = fin.evidence.tree.root();

  // Own key and verifier placed at the victim's leaf.
  auto forged = fin.evidence.proofs.at(v);
  forged.leaf = crypto::hash(evidence_bytes(impostor.key, own_verifier, static_cast<std::uint32_t>(victim)));
  if (crypto::merkle_check(forged) && forged.root == root && verifies(model, impostor.key, own_verifier)) return true;

  // The victim's genuine path, with the impostor's key checked against the victim's verifier.
  const auto& genuine = fin.evidence.proofs.at(v);
  return crypto::merkle_check(genuine) && genuine.root == root && verifies(model, impostor.key, fin.verifiers.at(v));
}

RecoveredProof recover_proof(const ledger::Ledger& log, int k, std::span<const std::optional<Bytes>> evidence) {
  if (k < 0 || static_cast<std::size_t>(k) >= evidence.size()) throw RangeError("client index outside the evidence tree");
  std::vector<std::size_t> missing;
  std::vector<crypto::Digest> leaves;
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    if (!evidence[i]) missing.push_back(i);
    else leaves.push_back(crypto::hash(*evidence[i]));
  }
  if (!missing.empty()) {
    std::string list;
    for (auto m : missing) list += (list.empty() ? "" : ", ") + std::to_string(m);
    throw IncompleteRecovery("missing evidence for leaves " + list, missing);
  }
  crypto::MerkleTree tree(leaves);
  RecoveredProof out;
  out.client = k;
  out.proof = tree.prove(static_cast<std::size_t>(k));
  for (const auto& e : log.entries()) {
    if (ledger::payload_tag(e.payload) != ledger::RecordTag::Anchor) continue;
    const auto a = ledger::decode_anchor(e.payload);
    if (a.root == tree.root() && a.leaves == evidence.size()) {
      out.anchor_seq = e.seq;
      break;
    }
  }
  out.valid = crypto::merkle_check(out.proof) && out.anchor_seq.has_value();
  return out;
}

AggregatableReport check_aggregatable(wm::SchemeId scheme, int n_owners, int trials, const nn::Model& base,
                                      const nn::Dataset& data, const nn::TrainConfig& embed_cfg,
                                      const wm::SchemeConfig& scfg, std::uint64_t seed, double epsilon) {
  if (n_owners < 1) throw InvalidParameter("need at least one owner");
  if (trials < 1) throw InvalidParameter("trials must be positive");
  AggregatableReport rep;
  rep.scheme = scheme;
  rep.n_owners = n_owners;
  rep.trials = trials;
  rep.epsilon = epsilon;
  std::vector<int> passes(static_cast<std::size_t>(n_owners), 0);

  for (int t = 0; t < trials; ++t) {
    const auto tt = static_cast<std::uint64_t>(t);
    const auto shards = nn::partition(data, n_owners, derive_seed(seed, {0xa9, tt}));
    std::vector<wm::WatermarkKey> keys;
    std::vector<std::optional<wm::Verifier>> verifiers;
    std::vector<nn::Model> locals;
    for (int k = 0; k < n_owners; ++k) {
      const auto kk = static_cast<std::uint64_t>(k);
      auto key = wm::gen(scheme, scfg.security_bits, base.arch, derive_seed(seed, {0xaa, tt, kk}), scfg, keys);
      keys.push_back(key);
      try {
        auto r = wm::embed(base, key, shards[kk], seeded(embed_cfg, derive_seed(seed, {0xab, tt, kk})), scfg);
        verifiers.push_back(r.verifier);
        locals.push_back(std::move(r.model));
      } catch (const EmbedFailure&) {
        verifiers.push_back(std::nullopt);
        locals.push_back(base);
      }
    }
    // With one owner the combinator is the identity.
    const nn::Model merged = n_owners == 1 ? locals.front() : average(locals);
    for (std::size_t k = 0; k < keys.size(); ++k)
      if (verifiers[k] && wm::verify(merged, keys[k], *verifiers[k])) ++passes[k];
  }
  rep.aggregatable = true;
  for (int p : passes) {
    rep.pass_rate.push_back(static_cast<double>(p) / trials);
    rep.aggregatable = rep.aggregatable && rep.pass_rate.back() >= 1.0 - epsilon;
  }
  return rep;
}

}  // namespace ovnet::fed
