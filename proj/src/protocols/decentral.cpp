#include "ovnet/protocols/decentral.hpp"

#include "ovnet/rng.hpp"

namespace ovnet::protocols {

namespace {

bool honest_vote(const OvRequest& r) {
  try {
    const auto model = nn::deserialize_model(r.model);
    const auto key = wm::WatermarkKey::deserialize(r.key);
    const auto verifier = wm::Verifier::deserialize(r.verifier);
    return wm::verify(model, key, verifier);
  } catch (const Error&) {
    return false;
  }
}

std::uint64_t digest_word(const crypto::Digest& d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{d.bytes[i]} << (8 * i);
  return v;
}

}  // namespace

Bytes OvRequest::message() const {
  ByteWriter w;
  w.raw(owner.view());
  w.blob(model);
  w.blob(key);
  w.blob(verifier);
  return std::move(w).take();
}

OvRequest make_ov_request(const crypto::KeyPair& owner, const nn::Model& model, const wm::WatermarkKey& key,
                          const wm::Verifier& verifier) {
  OvRequest r;
  r.owner = owner.verifying_key();
  r.model = nn::serialize(model);
  r.key = key.serialize();
  r.verifier = verifier.serialize();
  r.sig = crypto::sign(owner, r.message());
  return r;
}

bool check_request(const OvRequest& r) { return crypto::verify_sig(r.owner, r.message(), r.sig); }

Network::Network(const NetworkConfig& cfg) : cfg_(cfg), community_(cfg.community) {
  if (cfg.malicious > cfg.agents) throw InvalidParameter("more malicious agents than agents");
  if (!(cfg.participation >= 0.0 && cfg.participation <= 1.0)) throw InvalidParameter("participation must be in [0,1]");
  for (std::size_t i = 0; i < cfg.agents; ++i) {
    SimAgent a{crypto::KeyPair::from_seed(derive_seed(cfg.seed, {0xa9e, i})), i < cfg.agents - cfg.malicious};
    community_.register_participant(a.kp.verifying_key(), true, a.honest);
    agents_.push_back(std::move(a));
  }
}

crypto::Digest info_digest(const nn::ArchDescriptor& arch, const crypto::VerifyingKey& owner) {
  return crypto::hash(concat({arch.canonical_bytes(), owner.view()}));
}

LedgerEntry decentral_commit(Community& community, const crypto::KeyPair& owner, const wm::WatermarkKey& key,
                             const wm::Verifier& verifier, const nn::ArchDescriptor& arch) {
  ledger::OwnershipRecord rec;
  rec.time = community.log().next_seq();
  rec.h_key = key.digest();
  rec.h_verify = verifier.digest();
  rec.h_info = info_digest(arch, owner.verifying_key());
  return community.append(owner, ledger::encode(rec));
}

OvResult decentral_ov(Network& net, const crypto::KeyPair& owner, const nn::Model& model, const wm::WatermarkKey& key,
                      const wm::Verifier& verifier) {
  auto& community = net.community();
  auto request = make_ov_request(owner, model, key, verifier);
  if (!check_request(request)) throw SignatureError("OV request signature does not verify");

  OvResult res;
  res.request = request.digest();
  community.charge_fee(owner.verifying_key());
  community.append(owner, ledger::encode(ledger::OvRequestRecord{res.request, verifier.digest()}));
  net.broadcast(request);

  auto tally = community.open_tally(res.request);
  res.electorate = community.voters().size();
  const bool truth = honest_vote(request);
  const auto wire = request.wire_size();
  for (std::size_t i = 0; i < net.agents().size(); ++i) {
    const auto& a = net.agents()[i];
    Rng coin(derive_seed(net.config().seed, {0x0f0, digest_word(res.request), i}));
    if (coin.uniform() >= net.config().participation) continue;
    res.traffic_bytes += wire;
    const bool bit = a.honest ? truth : !truth;
    community.append(a.kp, ledger::encode(ledger::VoteRecord{res.request, bit}));
    tally.cast(a.kp.verifying_key(), bit);
  }
  res.verdict = tally.outcome();
  res.yes = tally.yes();
  res.no = tally.no();
  res.votes = tally.votes();
  res.minted = community.settle(tally);
  res.timestamp = community.lookup_timestamp(verifier.digest());
  res.anchored = res.timestamp.has_value();
  return res;
}

Evidence eavesdrop_capture(const OvRequest& request) {
  return {wm::WatermarkKey::deserialize(request.key), wm::Verifier::deserialize(request.verifier)};
}

DisputeRuling resolve_dispute(const ledger::Ledger& log, const nn::Model& model, std::span<const Claim> claims) {
  DisputeRuling out;
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const auto& c = claims[i];
    ClaimStatus s;
    try {
      s.verifies = wm::verify(model, c.key, c.verifier);
    } catch (const BindingError&) {
      s.verifies = false;
    }
    s.timestamp = log.lookup_timestamp(c.verifier.digest());
    if (s.timestamp) {
      const auto& e = log.at(*s.timestamp);
      s.own_record = e.author == c.claimant && ledger::decode_ownership(e.payload).h_key == c.key.digest();
    }
    if (s.verifies && s.own_record && (!out.winner || *s.timestamp < *out.claims[*out.winner].timestamp))
      out.winner = i;
    out.claims.push_back(s);
  }
  return out;
}

}  // namespace ovnet::protocols
