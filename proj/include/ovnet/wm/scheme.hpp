#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "ovnet/crypto/hash.hpp"
#include "ovnet/nn/dataset.hpp"
#include "ovnet/nn/model.hpp"
#include "ovnet/nn/train.hpp"

namespace ovnet::wm {

enum class SchemeId : std::uint8_t { ParamEmbed = 0x01, TriggerBackdoor = 0x02 };

std::string to_string(SchemeId s);
SchemeId scheme_from_string(std::string_view s);

/// White-box payload: U flat-parameter positions and the digit each must hold.
struct ParamPayload {
  std::vector<std::uint64_t> indices;
  std::vector<double> digits;
};

/// Black-box payload: T trigger inputs and the label each must produce.
struct TriggerPayload {
  Eigen::MatrixXd inputs;  // T x d
  Eigen::VectorXi labels;  // T
};

/// The owner's identity. Carries every secret needed to verify; the matching
/// Verifier carries none.
struct WatermarkKey {
  SchemeId scheme = SchemeId::ParamEmbed;
  std::variant<ParamPayload, TriggerPayload> payload;
  Bytes nonce;

  const ParamPayload& params() const { return std::get<ParamPayload>(payload); }
  const TriggerPayload& triggers() const { return std::get<TriggerPayload>(payload); }

  Bytes serialize() const;
  static WatermarkKey deserialize(ByteView b);
  crypto::Digest digest() const { return crypto::hash(serialize()); }

  friend bool operator==(const WatermarkKey& a, const WatermarkKey& b) { return a.serialize() == b.serialize(); }
};

struct Verifier {
  SchemeId scheme = SchemeId::ParamEmbed;
  // ParamEmbed: max absolute deviation per digit. TriggerBackdoor: minimum
  // trigger-set accuracy.
  double tolerance = 0.0;
  crypto::Digest binding;  // hash of the architecture's canonical bytes
  crypto::Digest key_id;   // hash of the key it pairs with

  Bytes serialize() const;
  static Verifier deserialize(ByteView b);
  crypto::Digest digest() const { return crypto::hash(serialize()); }
  bool operator==(const Verifier&) const = default;
};

/// Knobs for both schemes. Defaults are the desk-scale settings used across
/// the project.
struct SchemeConfig {
  int security_bits = 128;  // N

  // ParamEmbed
  int digit_count = 20;           // U
  double digit_min = 0.1;         // |digit| is drawn from [digit_min, digit_max]
  double digit_max = 0.2;
  double param_tolerance = 0.2;
  double embed_margin = 0.25;     // embedding drives deviations below margin * tolerance
  double penalty_weight = 100.0;  // initial proximal penalty; grows by penalty_growth per epoch
  double penalty_growth = 4.0;

  // TriggerBackdoor
  int trigger_count = 30;         // T
  double trigger_radius = 2.0;    // triggers are uniform in [-radius, radius]^d
  double trigger_threshold = 0.6; // tau
  int trigger_repeat = 4;         // copies of the trigger set mixed into each embedding epoch
  double trigger_loss_target = 0.02; // embedding runs until trigger cross-entropy drops below this
  int settle_epochs = 0;          // extra epochs after the trigger target is first met
};

struct EmbedResult {
  nn::Model model;
  Verifier verifier;
  double embed_time_ms = 0.0;
};

crypto::Digest arch_binding(const nn::ArchDescriptor& arch);

/// Flat indices ParamEmbed may address: the weights of the hidden-to-hidden
/// layers, or every weight when the architecture has no such layer. Input and
/// output layers move the most under continued training.
std::vector<std::uint64_t> param_positions(const nn::ArchDescriptor& arch);

/// key <- Gen(1^N). `avoid` lists keys whose ParamEmbed positions must not be reused.
WatermarkKey gen(SchemeId scheme, int security_bits, const nn::ArchDescriptor& arch, std::uint64_t seed,
                 const SchemeConfig& cfg = {}, std::span<const WatermarkKey> avoid = {});

/// (M_WM, verify) <- Embed(M, key). cfg.epochs is the epoch cap.
EmbedResult embed(const nn::Model& model, const WatermarkKey& key, const nn::Dataset& data,
                  const nn::TrainConfig& cfg, const SchemeConfig& scfg = {});

/// Verifier for `key` on `arch` without embedding (what Embed would return).
Verifier make_verifier(const WatermarkKey& key, const nn::ArchDescriptor& arch, const SchemeConfig& scfg = {});

/// Throws BindingError when the verifier belongs to another architecture or key.
bool verify(const nn::Model& model, const WatermarkKey& key, const Verifier& verifier);

/// Largest |param - digit| over the key's positions (ParamEmbed only).
double max_deviation(const nn::Model& model, const ParamPayload& p);
/// Fraction of triggers mapped to their label (TriggerBackdoor only).
double trigger_accuracy(const nn::Model& model, const TriggerPayload& t);

struct EmbedManyResult {
  nn::Model model;
  std::vector<Verifier> verifiers;
  std::vector<double> embed_times_ms;
};

EmbedManyResult embed_many(const nn::Model& model, std::span<const WatermarkKey> keys, const nn::Dataset& data,
                           const nn::TrainConfig& cfg, const SchemeConfig& scfg = {});

/// Throws InvalidParameter if two ParamEmbed keys share a position.
void require_disjoint(std::span<const WatermarkKey> keys);

}  // namespace ovnet::wm
