#include "ovnet/wm/scheme.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "ovnet/nn/mlp.hpp"
#include "ovnet/rng.hpp"

namespace ovnet::wm {

namespace {

constexpr std::uint8_t kKeyMagic = 0x4b;       // 'K'
constexpr std::uint8_t kVerifierMagic = 0x56;  // 'V'

void check_scheme_tag(std::uint8_t tag) {
  if (tag != static_cast<std::uint8_t>(SchemeId::ParamEmbed) &&
      tag != static_cast<std::uint8_t>(SchemeId::TriggerBackdoor))
    throw FormatError("unknown scheme tag");
}

nn::Dataset trigger_dataset(const TriggerPayload& t, int n_classes) {
  nn::Dataset d;
  d.inputs = t.inputs;
  d.labels = t.labels;
  d.n_classes = n_classes;
  return d;
}

void check_key_against_arch(const WatermarkKey& key, const nn::ArchDescriptor& arch) {
  if (key.scheme == SchemeId::ParamEmbed) {
    const auto& p = key.params();
    for (auto i : p.indices)
      if (i >= arch.param_count()) throw InvalidParameter("watermark index outside parameter vector");
  } else {
    const auto& t = key.triggers();
    if (t.inputs.cols() != static_cast<Eigen::Index>(arch.input_width()))
      throw InvalidParameter("trigger width does not match architecture input");
    for (Eigen::Index i = 0; i < t.labels.size(); ++i)
      if (t.labels(i) < 0 || t.labels(i) >= static_cast<int>(arch.output_width()))
        throw InvalidParameter("trigger label outside architecture classes");
  }
}

}  // namespace

std::string to_string(SchemeId s) {
  return s == SchemeId::ParamEmbed ? "ParamEmbed" : "TriggerBackdoor";
}

SchemeId scheme_from_string(std::string_view s) {
  if (s == "ParamEmbed" || s == "param") return SchemeId::ParamEmbed;
  if (s == "TriggerBackdoor" || s == "trigger") return SchemeId::TriggerBackdoor;
  throw InvalidParameter("unknown scheme '" + std::string(s) + "'");
}

Bytes WatermarkKey::serialize() const {
  ByteWriter w;
  w.u8(kKeyMagic);
  w.u8(static_cast<std::uint8_t>(scheme));
  w.blob(nonce);
  if (scheme == SchemeId::ParamEmbed) {
    const auto& p = params();
    w.u32(static_cast<std::uint32_t>(p.indices.size()));
    for (std::size_t i = 0; i < p.indices.size(); ++i) {
      w.u64(p.indices[i]);
      w.f64(p.digits[i]);
    }
  } else {
    const auto& t = triggers();
    w.u32(static_cast<std::uint32_t>(t.inputs.rows()));
    w.u32(static_cast<std::uint32_t>(t.inputs.cols()));
    for (Eigen::Index r = 0; r < t.inputs.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.inputs.cols(); ++c) w.f64(t.inputs(r, c));
      w.u32(static_cast<std::uint32_t>(t.labels(r)));
    }
  }
  return std::move(w).take();
}

WatermarkKey WatermarkKey::deserialize(ByteView b) {
  ByteReader r(b);
  if (r.u8() != kKeyMagic) throw FormatError("not a watermark key");
  const auto tag = r.u8();
  check_scheme_tag(tag);
  WatermarkKey k;
  k.scheme = static_cast<SchemeId>(tag);
  k.nonce = r.blob();
  if (k.scheme == SchemeId::ParamEmbed) {
    ParamPayload p;
    const auto n = r.u32();
    if (n > r.remaining() / 16) throw FormatError("truncated key payload");
    for (std::uint32_t i = 0; i < n; ++i) {
      p.indices.push_back(r.u64());
      p.digits.push_back(r.f64());
    }
    k.payload = std::move(p);
  } else {
    TriggerPayload t;
    const auto rows = r.u32();
    const auto cols = r.u32();
    if (std::uint64_t{rows} * (std::uint64_t{cols} * 8 + 4) > r.remaining()) throw FormatError("truncated key payload");
    t.inputs.resize(rows, cols);
    t.labels.resize(rows);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t c = 0; c < cols; ++c) t.inputs(i, c) = r.f64();
      t.labels(i) = static_cast<int>(r.u32());
    }
    k.payload = std::move(t);
  }
  r.expect_done();
  return k;
}

Bytes Verifier::serialize() const {
  ByteWriter w;
  w.u8(kVerifierMagic);
  w.u8(static_cast<std::uint8_t>(scheme));
  w.f64(tolerance);
  w.raw(binding.view());
  w.raw(key_id.view());
  return std::move(w).take();
}

Verifier Verifier::deserialize(ByteView b) {
  ByteReader r(b);
  if (r.u8() != kVerifierMagic) throw FormatError("not a verifier");
  const auto tag = r.u8();
  check_scheme_tag(tag);
  Verifier v;
  v.scheme = static_cast<SchemeId>(tag);
  v.tolerance = r.f64();
  v.binding = crypto::Digest::from_bytes(r.raw(32));
  v.key_id = crypto::Digest::from_bytes(r.raw(32));
  r.expect_done();
  return v;
}

crypto::Digest arch_binding(const nn::ArchDescriptor& arch) { return crypto::hash(arch.canonical_bytes()); }

std::vector<std::uint64_t> param_positions(const nn::ArchDescriptor& arch) {
  std::vector<std::uint64_t> out;
  const std::size_t first = arch.n_layers() >= 3 ? 1 : 0;
  const std::size_t last = arch.n_layers() >= 3 ? arch.n_layers() - 1 : arch.n_layers();
  for (std::size_t l = first; l < last; ++l) {
    const auto w0 = arch.weight_offset(l);
    const std::size_t count = std::size_t{arch.layer_widths[l]} * arch.layer_widths[l + 1];
    for (std::size_t i = 0; i < count; ++i) out.push_back(w0 + i);
  }
  return out;
}

WatermarkKey gen(SchemeId scheme, int security_bits, const nn::ArchDescriptor& arch, std::uint64_t seed,
                 const SchemeConfig& cfg, std::span<const WatermarkKey> avoid) {
  arch.validate();
  if (security_bits < 64) throw InvalidParameter("security parameter N must be at least 64");
  Rng rng(derive_seed(seed, {0x6e6, static_cast<std::uint64_t>(scheme)}));

  WatermarkKey key;
  key.scheme = scheme;
  key.nonce.resize(static_cast<std::size_t>((security_bits + 7) / 8));
  for (auto& b : key.nonce) b = static_cast<std::uint8_t>(rng.bits());
  if (security_bits % 8 != 0) key.nonce.back() &= static_cast<std::uint8_t>((1u << (security_bits % 8)) - 1);

  if (scheme == SchemeId::ParamEmbed) {
    if (cfg.digit_count < 1) throw InvalidParameter("digit count U must be positive");
    if (!(cfg.digit_min > 0.0 && cfg.digit_max >= cfg.digit_min)) throw InvalidParameter("bad digit range");
    std::unordered_set<std::uint64_t> taken;
    for (const auto& k : avoid)
      if (k.scheme == SchemeId::ParamEmbed) taken.insert(k.params().indices.begin(), k.params().indices.end());
    const auto pool = param_positions(arch);
    std::size_t free = 0;
    for (auto i : pool) free += taken.count(i) ? 0 : 1;
    if (static_cast<std::size_t>(cfg.digit_count) > free)
      throw InvalidParameter("U = " + std::to_string(cfg.digit_count) + " exceeds free parameter capacity " +
                             std::to_string(free));
    ParamPayload p;
    while (p.indices.size() < static_cast<std::size_t>(cfg.digit_count)) {
      const auto idx = pool[rng.below(pool.size())];
      if (!taken.insert(idx).second) continue;
      p.indices.push_back(idx);
      const double mag = rng.uniform(cfg.digit_min, cfg.digit_max);
      p.digits.push_back(rng.coin() ? mag : -mag);
    }
    key.payload = std::move(p);
  } else {
    if (cfg.trigger_count < 1) throw InvalidParameter("trigger count T must be positive");
    if (arch.output_width() < 2) throw InvalidParameter("trigger watermarks need at least two classes");
    TriggerPayload t;
    t.inputs.resize(cfg.trigger_count, arch.input_width());
    t.labels.resize(cfg.trigger_count);
    for (int i = 0; i < cfg.trigger_count; ++i) {
      for (Eigen::Index c = 0; c < t.inputs.cols(); ++c) t.inputs(i, c) = rng.uniform(-cfg.trigger_radius, cfg.trigger_radius);
      t.labels(i) = static_cast<int>(rng.below(arch.output_width()));
    }
    key.payload = std::move(t);
  }
  return key;
}

Verifier make_verifier(const WatermarkKey& key, const nn::ArchDescriptor& arch, const SchemeConfig& scfg) {
  const SchemeId scheme = key.scheme;
  Verifier v;
  v.scheme = scheme;
  v.tolerance = scheme == SchemeId::ParamEmbed ? scfg.param_tolerance : scfg.trigger_threshold;
  if (!(v.tolerance > 0.0)) throw InvalidParameter("verifier tolerance must be positive");
  if (scheme == SchemeId::TriggerBackdoor && v.tolerance > 1.0)
    throw InvalidParameter("trigger threshold must be in (0,1]");
  v.binding = arch_binding(arch);
  v.key_id = key.digest();
  return v;
}

double max_deviation(const nn::Model& model, const ParamPayload& p) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.indices.size(); ++i) {
    if (p.indices[i] >= static_cast<std::uint64_t>(model.params.size()))
      throw InvalidParameter("watermark index outside parameter vector");
    worst = std::max(worst, std::abs(model.params(static_cast<Eigen::Index>(p.indices[i])) - p.digits[i]));
  }
  return worst;
}

double trigger_accuracy(const nn::Model& model, const TriggerPayload& t) {
  if (t.labels.size() == 0) return 0.0;
  const auto pred = nn::predict(model, t.inputs);
  return static_cast<double>((pred.array() == t.labels.array()).count()) / static_cast<double>(t.labels.size());
}

EmbedResult embed(const nn::Model& model, const WatermarkKey& key, const nn::Dataset& data,
                  const nn::TrainConfig& cfg, const SchemeConfig& scfg) {
  const auto t0 = std::chrono::steady_clock::now();
  nn::check_model(model);
  check_key_against_arch(key, model.arch);
  data.validate();
  cfg.validate(data);
  if (static_cast<int>(model.arch.output_width()) != data.n_classes)
    throw ShapeError("model output width does not match dataset classes");

  EmbedResult out{model, make_verifier(key, model.arch, scfg), 0.0};
  nn::Model& m = out.model;
  int settled = -1;  // epochs run since the target was first met

  if (key.scheme == SchemeId::ParamEmbed) {
    const auto& p = key.params();
    const double target = scfg.embed_margin * scfg.param_tolerance;
    double weight = scfg.penalty_weight;
    // Penalty grows by penalty_growth per epoch, spread over the steps.
    const double steps = std::ceil(static_cast<double>(data.size()) / cfg.batch_size);
    const double step_growth = std::pow(scfg.penalty_growth, 1.0 / steps);
    bool reached = false;
    for (int e = 0; e < cfg.epochs && !reached; ++e) {
      nn::sgd_epoch(m, data, cfg.learning_rate, cfg.batch_size, derive_seed(cfg.seed, {0xe3b, static_cast<std::uint64_t>(e)}),
                    [&](nn::Vec<double>& params) {
                      // Proximal step on the addressed parameters:
                      // argmin_q (q - v)^2 / (2 lr) + weight/2 (q - digit)^2.
                      const double shrink = 1.0 / (1.0 + cfg.learning_rate * weight);
                      double worst = 0.0;
                      for (std::size_t i = 0; i < p.indices.size(); ++i) {
                        auto& v = params(static_cast<Eigen::Index>(p.indices[i]));
                        v = p.digits[i] + (v - p.digits[i]) * shrink;
                        worst = std::max(worst, std::abs(v - p.digits[i]));
                      }
                      weight *= step_growth;
                      reached = worst <= target;
                      return !reached;
                    });
    }
    if (max_deviation(m, p) > target)
      throw EmbedFailure("ParamEmbed did not reach tolerance within " + std::to_string(cfg.epochs) + " epochs");
  } else {
    const auto& t = key.triggers();
    nn::Dataset mixed = data;
    const auto trig = trigger_dataset(t, data.n_classes);
    for (int r = 0; r < scfg.trigger_repeat; ++r) mixed = nn::concat(mixed, trig);
    for (int e = 0; e < cfg.epochs; ++e) {
      nn::sgd_epoch(m, mixed, cfg.learning_rate, cfg.batch_size, derive_seed(cfg.seed, {0xe3c, static_cast<std::uint64_t>(e)}));
      const bool met = trigger_accuracy(m, t) >= 1.0 && nn::loss(m, trig) <= scfg.trigger_loss_target;
      if (settled < 0 && met) settled = 0;
      else if (settled >= 0) ++settled;
      if (settled >= scfg.settle_epochs && met) break;
    }
    if (trigger_accuracy(m, t) < out.verifier.tolerance)
      throw EmbedFailure("TriggerBackdoor did not reach trigger accuracy within " + std::to_string(cfg.epochs) + " epochs");
  }
  nn::check_model(m);
  out.embed_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

bool verify(const nn::Model& model, const WatermarkKey& key, const Verifier& verifier) {
  if (verifier.binding != arch_binding(model.arch))
    throw BindingError("verifier is bound to a different architecture");
  if (key.scheme != verifier.scheme) throw InvalidParameter("key and verifier belong to different schemes");
  if (verifier.key_id != key.digest()) throw BindingError("verifier was issued for a different key");
  check_key_against_arch(key, model.arch);
  if (key.scheme == SchemeId::ParamEmbed) return max_deviation(model, key.params()) <= verifier.tolerance;
  return trigger_accuracy(model, key.triggers()) >= verifier.tolerance;
}

void require_disjoint(std::span<const WatermarkKey> keys) {
  std::unordered_set<std::uint64_t> seen;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (keys[k].scheme != SchemeId::ParamEmbed) continue;
    for (auto i : keys[k].params().indices)
      if (!seen.insert(i).second)
        throw InvalidParameter("ParamEmbed key " + std::to_string(k) + " reuses parameter index " + std::to_string(i));
  }
}

EmbedManyResult embed_many(const nn::Model& model, std::span<const WatermarkKey> keys, const nn::Dataset& data,
                           const nn::TrainConfig& cfg, const SchemeConfig& scfg) {
  EmbedManyResult out{model, {}, {}};
  if (keys.empty()) return out;
  for (const auto& k : keys)
    if (k.scheme != keys.front().scheme) throw InvalidParameter("embed_many needs keys of a single scheme");
  require_disjoint(keys);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    try {
      auto r = embed(out.model, keys[i], data, cfg, scfg);
      out.model = std::move(r.model);
      out.verifiers.push_back(r.verifier);
      out.embed_times_ms.push_back(r.embed_time_ms);
    } catch (const EmbedFailure& e) {
      throw EmbedFailure("watermark " + std::to_string(i) + ": " + e.what(), i);
    }
  }
  return out;
}

}  // namespace ovnet::wm
