#include "ovnet/protocols/central.hpp"

#include "ovnet/rng.hpp"

namespace ovnet::protocols {

Bytes AuthorizedKey::token_message() const {
  ByteWriter w;
  w.str("ovnet-notary-token");
  w.str(owner);
  w.u64(seq);
  w.raw(key.digest().view());
  w.raw(verifier.digest().view());
  return std::move(w).take();
}

Notary::Notary(std::uint64_t seed, bool trusted)
    : kp_(crypto::KeyPair::from_seed(derive_seed(seed, {0x0a7a}))), trusted_(trusted) {}

AuthorizedKey Notary::register_key(const std::string& owner, const wm::WatermarkKey& key,
                                   const wm::Verifier& verifier) {
  const auto kd = key.digest();
  for (const auto& [name, keys] : registry_)
    for (const auto& k : keys)
      if (k.key.digest() == kd) {
        if (name != owner) throw RegistrationError("key is already registered to another owner");
        return k;
      }
  AuthorizedKey a{owner, key, verifier, next_seq_++, {}};
  a.token = crypto::sign(kp_, a.token_message());
  registry_[owner].push_back(a);
  return a;
}

bool Notary::check_token(const AuthorizedKey& k) const {
  return crypto::verify_sig(id(), k.token_message(), k.token);
}

const std::vector<AuthorizedKey>& Notary::registered(const std::string& owner) const {
  auto it = registry_.find(owner);
  if (it == registry_.end()) throw RegistrationError("owner '" + owner + "' is not registered");
  return it->second;
}

bool Notary::verify(const std::string& owner, const nn::Model& model) {
  bool verdict = false;
  for (const auto& k : registered(owner)) {
    try {
      verdict = verdict || wm::verify(model, k.key, k.verifier);
    } catch (const BindingError&) {
    }
  }
  published_.push_back({owner, verdict});
  return verdict;
}

std::optional<std::string> Notary::rule(const nn::Model& model, std::span<const std::string> claimants) const {
  std::optional<std::string> winner;
  std::uint64_t best = 0;
  for (const auto& c : claimants) {
    auto it = registry_.find(c);
    if (it == registry_.end()) continue;
    for (const auto& k : it->second) {
      bool ok = false;
      try {
        ok = wm::verify(model, k.key, k.verifier);
      } catch (const BindingError&) {
      }
      if (ok && (!winner || k.seq < best)) {
        winner = c;
        best = k.seq;
      }
    }
  }
  return winner;
}

AuthorizedKey central_register(Notary& notary, const std::string& owner, const wm::WatermarkKey& key,
                               const wm::Verifier& verifier) {
  return notary.register_key(owner, key, verifier);
}

bool central_verify(Notary& notary, const std::string& owner, const nn::Model& model) {
  return notary.verify(owner, model);
}

}  // namespace ovnet::protocols
