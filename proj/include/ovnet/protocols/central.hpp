#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ovnet/crypto/sign.hpp"
#include "ovnet/nn/model.hpp"
#include "ovnet/wm/scheme.hpp"

namespace ovnet::protocols {

/// A key returned by the notary, carrying its signed time authorization.
struct AuthorizedKey {
  std::string owner;
  wm::WatermarkKey key;
  wm::Verifier verifier;
  std::uint64_t seq = 0;
  crypto::Signature token;  // notary signature over token_message()

  Bytes token_message() const;
};

struct PublishedVerdict {
  std::string owner;
  bool verdict = false;
};

/// The centralized protocol's notary. `trusted` stands in for an SMPC
/// deployment; when false the notary is assumed to read every key it holds.
class Notary {
 public:
  explicit Notary(std::uint64_t seed, bool trusted = true);

  const crypto::VerifyingKey& id() const { return kp_.verifying_key(); }
  bool trusted() const { return trusted_; }

  /// Registering an already registered key returns the original token.
  AuthorizedKey register_key(const std::string& owner, const wm::WatermarkKey& key, const wm::Verifier& verifier);
  bool check_token(const AuthorizedKey& k) const;

  /// 1 if any key registered by `owner` verifies on `model`. Published.
  bool verify(const std::string& owner, const nn::Model& model);

  /// Among claimants whose registered keys verify, the one holding the
  /// earliest authorization.
  std::optional<std::string> rule(const nn::Model& model, std::span<const std::string> claimants) const;

  const std::vector<AuthorizedKey>& registered(const std::string& owner) const;
  const std::vector<PublishedVerdict>& published() const { return published_; }

 private:
  crypto::KeyPair kp_;
  bool trusted_;
  std::uint64_t next_seq_ = 0;
  std::map<std::string, std::vector<AuthorizedKey>> registry_;
  std::vector<PublishedVerdict> published_;
};

AuthorizedKey central_register(Notary& notary, const std::string& owner, const wm::WatermarkKey& key,
                               const wm::Verifier& verifier);
bool central_verify(Notary& notary, const std::string& owner, const nn::Model& model);

}  // namespace ovnet::protocols
