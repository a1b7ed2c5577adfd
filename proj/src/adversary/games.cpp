#include "ovnet/adversary/games.hpp"

#include <cmath>

#include "ovnet/nn/mlp.hpp"

namespace ovnet::adv {

namespace {

constexpr std::uint64_t kCovertTag = 0xc0;
constexpr std::uint64_t kKeyPpTag = 0xd0;
constexpr std::uint64_t kSpoilTag = 0xe0;

struct Threshold {
  double value = 0.0;
  bool above_means_marked = true;
};

template <class Stat>
Threshold fit_threshold(std::span<const nn::Model> clean, std::span<const nn::Model> marked, Stat stat) {
  if (clean.empty() || marked.empty()) throw InvalidParameter("calibration needs both clean and marked models");
  double mc = 0.0, mm = 0.0;
  for (const auto& m : clean) mc += stat(m);
  for (const auto& m : marked) mm += stat(m);
  mc /= static_cast<double>(clean.size());
  mm /= static_cast<double>(marked.size());
  return {(mc + mm) / 2.0, mm >= mc};
}

int threshold_guess(double s, double threshold, bool above_means_marked, Rng& rng) {
  if (s == threshold) return rng.coin() ? 1 : 0;
  return (s > threshold) == above_means_marked ? 1 : 0;
}

const nn::Model& pool_model(const GameSetup& s, int t) {
  if (s.clean_pool.empty()) throw InvalidParameter("game setup has an empty clean-model pool");
  return s.clean_pool[static_cast<std::size_t>(t) % s.clean_pool.size()];
}

GameOutcome guessing_engine(Game framing, wm::SchemeId scheme, Distinguisher& d, int trials, const GameSetup& setup,
                            const GameOptions& opts) {
  if (trials < 1) throw InvalidParameter("trials must be positive");
  const auto& b = setup.bench;
  const auto& scfg = b.spec.scheme;
  GameOutcome out{framing, scheme, d.name(), trials, 0, 0.5, {}};
  for (int t = 0; t < trials; ++t) {
    const auto tt = static_cast<std::uint64_t>(t);
    Rng rng(derive_seed(setup.seed, {kCovertTag, tt}));
    const int bit = rng.coin() ? 1 : 0;
    const auto& clean = pool_model(setup, t);
    const auto key = wm::gen(scheme, scfg.security_bits, clean.arch, derive_seed(setup.seed, {kCovertTag + 1, tt}), scfg);
    const auto marked = wm::embed(clean, key, b.train, b.embed_cfg(0xc200 + tt), scfg).model;

    GameView view;
    view.security_bits = scfg.security_bits;
    view.scheme = scheme;
    view.scfg = &scfg;
    view.model = bit ? &marked : &clean;
    if (opts.bit_tap) opts.bit_tap(bit);
    Rng drng(derive_seed(setup.seed, {kCovertTag + 2, tt}));
    const int g = d.guess(view, drng);
    const bool win = g == bit;
    out.wins += win ? 1 : 0;
    if (opts.keep_transcript) out.transcript.push_back({bit, g, win});
  }
  return out;
}

}  // namespace

std::string to_string(Game g) {
  switch (g) {
    case Game::covertness: return "covertness";
    case Game::key_pp: return "key_pp";
    case Game::spoil: return "spoil";
    case Game::clean: return "clean";
  }
  return "?";
}

double GameOutcome::band3() const {
  if (trials == 0 || baseline == 0.0) return 0.0;
  return 3.0 * std::sqrt(baseline * (1.0 - baseline) / trials);
}

double ParamMomentDistinguisher::statistic(const nn::Model& m, const wm::SchemeConfig& scfg) {
  std::size_t hits = 0, weights = 0;
  for (std::size_t i = 0; i < m.arch.param_count(); ++i) {
    if (!m.arch.is_weight(i)) continue;
    ++weights;
    const double a = std::abs(m.params(static_cast<Eigen::Index>(i)));
    hits += (a >= scfg.digit_min && a <= scfg.digit_max) ? 1 : 0;
  }
  return weights ? static_cast<double>(hits) / static_cast<double>(weights) : 0.0;
}

void ParamMomentDistinguisher::calibrate(std::span<const nn::Model> clean, std::span<const nn::Model> marked,
                                         const wm::SchemeConfig& scfg) {
  const auto th = fit_threshold(clean, marked, [&](const nn::Model& m) { return statistic(m, scfg); });
  threshold_ = th.value;
  above_means_marked_ = th.above_means_marked;
  calibrated_ = true;
}

int ParamMomentDistinguisher::guess(const GameView& view, Rng& rng) {
  if (!calibrated_ || view.model == nullptr) return rng.coin() ? 1 : 0;
  return threshold_guess(statistic(*view.model, *view.scfg), threshold_, above_means_marked_, rng);
}

int DigitResidueDistinguisher::guess(const GameView& view, Rng& rng) {
  if (view.key0 == nullptr || view.key1 == nullptr || view.model == nullptr) return rng.coin() ? 1 : 0;
  double s0, s1;
  if (view.scheme == wm::SchemeId::ParamEmbed) {
    // Smaller residue means a better fit; negate so larger is better.
    s0 = -wm::max_deviation(*view.model, view.key0->params());
    s1 = -wm::max_deviation(*view.model, view.key1->params());
  } else {
    s0 = wm::trigger_accuracy(*view.model, view.key0->triggers());
    s1 = wm::trigger_accuracy(*view.model, view.key1->triggers());
  }
  if (s0 == s1) return rng.coin() ? 1 : 0;
  return s1 > s0 ? 1 : 0;
}

double TriggerProbeDistinguisher::statistic(const nn::Model& m, const wm::SchemeConfig& scfg) const {
  Rng rng(seed_);
  nn::Mat<double> x(probes_, m.arch.input_width());
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-scfg.trigger_radius, scfg.trigger_radius);
  const auto z = nn::logits(m, x);
  double total = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    total += 1.0 / (z.row(r).array() - mx).exp().sum();
  }
  return total / static_cast<double>(z.rows());
}

void TriggerProbeDistinguisher::calibrate(std::span<const nn::Model> clean, std::span<const nn::Model> marked,
                                          const wm::SchemeConfig& scfg) {
  const auto th = fit_threshold(clean, marked, [&](const nn::Model& m) { return statistic(m, scfg); });
  threshold_ = th.value;
  above_means_marked_ = th.above_means_marked;
  calibrated_ = true;
}

int TriggerProbeDistinguisher::guess(const GameView& view, Rng& rng) {
  if (view.model == nullptr) return rng.coin() ? 1 : 0;
  if (view.key0 && view.key1) {
    if (view.scheme != wm::SchemeId::TriggerBackdoor) return rng.coin() ? 1 : 0;
    const double a0 = wm::trigger_accuracy(*view.model, view.key0->triggers());
    const double a1 = wm::trigger_accuracy(*view.model, view.key1->triggers());
    if (a0 == a1) return rng.coin() ? 1 : 0;
    return a1 > a0 ? 1 : 0;
  }
  if (!calibrated_) return rng.coin() ? 1 : 0;
  return threshold_guess(statistic(*view.model, *view.scfg), threshold_, above_means_marked_, rng);
}

std::unique_ptr<Distinguisher> make_distinguisher(const std::string& name) {
  if (name == "null") return std::make_unique<NullDistinguisher>();
  if (name == "param-moment") return std::make_unique<ParamMomentDistinguisher>();
  if (name == "digit-residue") return std::make_unique<DigitResidueDistinguisher>();
  if (name == "trigger-probe") return std::make_unique<TriggerProbeDistinguisher>();
  throw InvalidParameter("unknown distinguisher '" + name + "'");
}

GameSetup make_game_setup(const bench::Benchmark& b, int pool_size, std::uint64_t seed) {
  if (pool_size < 1) throw InvalidParameter("pool size must be positive");
  GameSetup s{b, {}, seed};
  for (int i = 0; i < pool_size; ++i) {
    auto arch = b.arch;
    arch.seed = derive_seed(seed, {0x9001, static_cast<std::uint64_t>(i)});
    s.clean_pool.push_back(nn::train(nn::init_model(arch), b.train, b.train_cfg(0x9100 + static_cast<std::uint64_t>(i))));
  }
  return s;
}

GameOutcome run_covertness_game(wm::SchemeId scheme, Distinguisher& d, int trials, const GameSetup& setup,
                                const GameOptions& opts) {
  return guessing_engine(Game::covertness, scheme, d, trials, setup, opts);
}

GameOutcome run_clean_game(wm::SchemeId scheme, Distinguisher& prover, int trials, const GameSetup& setup,
                           const GameOptions& opts) {
  return guessing_engine(Game::clean, scheme, prover, trials, setup, opts);
}

GameOutcome run_key_pp_game(wm::SchemeId scheme, Distinguisher& d, int trials, const GameSetup& setup,
                            const GameOptions& opts) {
  if (trials < 1) throw InvalidParameter("trials must be positive");
  const auto& b = setup.bench;
  const auto& scfg = b.spec.scheme;
  GameOutcome out{Game::key_pp, scheme, d.name(), trials, 0, 0.5, {}};
  for (int t = 0; t < trials; ++t) {
    const auto tt = static_cast<std::uint64_t>(t);
    const auto& clean = pool_model(setup, t);
    const auto key0 = wm::gen(scheme, scfg.security_bits, clean.arch, derive_seed(setup.seed, {kKeyPpTag + 1, tt}), scfg);
    auto key1 = key0;
    for (std::uint64_t salt = 0; key1 == key0; ++salt)
      key1 = wm::gen(scheme, scfg.security_bits, clean.arch, derive_seed(setup.seed, {kKeyPpTag + 2, tt, salt}), scfg);
    Rng rng(derive_seed(setup.seed, {kKeyPpTag, tt}));
    const int bit = rng.coin() ? 1 : 0;
    const auto marked = wm::embed(clean, bit ? key1 : key0, b.train, b.embed_cfg(0xd200 + tt), scfg).model;

    GameView view;
    view.security_bits = scfg.security_bits;
    view.scheme = scheme;
    view.scfg = &scfg;
    view.model = &marked;
    view.clean = &clean;
    view.key0 = &key0;
    view.key1 = &key1;
    if (opts.bit_tap) opts.bit_tap(bit);
    Rng drng(derive_seed(setup.seed, {kKeyPpTag + 3, tt}));
    const int g = d.guess(view, drng);
    const bool win = g == bit;
    out.wins += win ? 1 : 0;
    if (opts.keep_transcript) out.transcript.push_back({bit, g, win});
  }
  return out;
}

SpoilAdversary shipped_spoiler(const AttackBudget& budget, const wm::SchemeConfig& scfg) {
  return [budget, scfg](const nn::Model& m_wm, const wm::WatermarkKey& key, const wm::Verifier& verifier,
                        const nn::Dataset& data, std::uint64_t seed) {
    auto b = budget;
    b.seed = seed;
    return spoil(m_wm, key, verifier, data, b, scfg);
  };
}

GameOutcome run_spoil_game(wm::SchemeId scheme, double delta, int trials, const GameSetup& setup,
                           const SpoilAdversary& adversary, const GameOptions& opts) {
  if (trials < 1) throw InvalidParameter("trials must be positive");
  if (!(delta >= 0.0)) throw InvalidParameter("delta must be non-negative");
  const auto& b = setup.bench;
  const auto& scfg = b.spec.scheme;
  GameOutcome out{Game::spoil, scheme, "spoil", trials, 0, 0.0, {}};
  for (int t = 0; t < trials; ++t) {
    const auto tt = static_cast<std::uint64_t>(t);
    const auto& clean = pool_model(setup, t);
    const auto key = wm::gen(scheme, scfg.security_bits, clean.arch, derive_seed(setup.seed, {kSpoilTag + 1, tt}), scfg);
    const auto r = wm::embed(clean, key, b.train, b.embed_cfg(0xe200 + tt), scfg);
    bool win = false;
    try {
      const auto spoiled = adversary(r.model, key, r.verifier, b.train, derive_seed(setup.seed, {kSpoilTag + 2, tt}));
      // Both clauses are re-checked here; the attack's own claim is not trusted.
      const bool removed = !wm::verify(spoiled, key, r.verifier);
      const double decline = nn::accuracy(r.model, b.test) - nn::accuracy(spoiled, b.test);
      win = removed && decline <= delta + 1e-12;
    } catch (const SpoilFailure&) {
      win = false;
    }
    out.wins += win ? 1 : 0;
    if (opts.keep_transcript) out.transcript.push_back({0, win ? 1 : 0, win});
  }
  return out;
}

}  // namespace ovnet::adv
