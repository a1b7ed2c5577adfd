#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ovnet/adversary/attacks.hpp"
#include "ovnet/bench.hpp"
#include "ovnet/rng.hpp"

namespace ovnet::adv {

enum class Game { covertness, key_pp, spoil, clean };
std::string to_string(Game g);

struct TrialRecord {
  int b = 0;      // hidden bit (spoil: unused)
  int guess = 0;  // spoil: 1 if the harness accepted the win
  bool win = false;
};

struct GameOutcome {
  Game game = Game::covertness;
  wm::SchemeId scheme = wm::SchemeId::ParamEmbed;
  std::string player;  // distinguisher, prover or attack name
  int trials = 0;
  int wins = 0;
  double baseline = 0.5;  // 1/2 for guessing games, 0 for spoil
  std::vector<TrialRecord> transcript;  // filled when requested

  double win_rate() const { return trials ? static_cast<double>(wins) / trials : 0.0; }
  double advantage() const { return win_rate() - baseline; }
  /// Half-width of the 3-sigma binomial band around the baseline.
  double band3() const;
};

/// What a distinguisher sees. Covertness and clean games fill `model` only;
/// key_pp fills `model` (M_WM), `clean` and both keys.
struct GameView {
  int security_bits = 128;
  wm::SchemeId scheme = wm::SchemeId::ParamEmbed;
  const wm::SchemeConfig* scfg = nullptr;
  const nn::Model* model = nullptr;
  const nn::Model* clean = nullptr;
  const wm::WatermarkKey* key0 = nullptr;
  const wm::WatermarkKey* key1 = nullptr;
};

class Distinguisher {
 public:
  virtual ~Distinguisher() = default;
  virtual std::string name() const = 0;
  /// Guess the hidden bit.
  virtual int guess(const GameView& view, Rng& rng) = 0;
  /// Optional offline calibration on labelled examples (label 1 = watermarked).
  virtual void calibrate(std::span<const nn::Model> clean, std::span<const nn::Model> marked, const wm::SchemeConfig&) {
    (void)clean;
    (void)marked;
  }
};

/// Fair coin.
class NullDistinguisher : public Distinguisher {
 public:
  std::string name() const override { return "null"; }
  int guess(const GameView&, Rng& rng) override { return rng.coin() ? 1 : 0; }
};

/// Fraction of weights whose magnitude lies in the digit range, thresholded
/// at the midpoint of the calibration means.
class ParamMomentDistinguisher : public Distinguisher {
 public:
  std::string name() const override { return "param-moment"; }
  int guess(const GameView& view, Rng& rng) override;
  void calibrate(std::span<const nn::Model> clean, std::span<const nn::Model> marked, const wm::SchemeConfig& scfg) override;
  static double statistic(const nn::Model& m, const wm::SchemeConfig& scfg);

 private:
  double threshold_ = 0.0;
  bool above_means_marked_ = true;
  bool calibrated_ = false;
};

/// Key-pp: picks the key whose digits sit closest to the model's parameters
/// (ParamEmbed) or whose triggers the model fits best (TriggerBackdoor).
class DigitResidueDistinguisher : public Distinguisher {
 public:
  std::string name() const override { return "digit-residue"; }
  int guess(const GameView& view, Rng& rng) override;
};

/// Covertness: mean top-class confidence on random inputs drawn from the
/// trigger box, thresholded from calibration. Key-pp: trigger accuracy of each key.
class TriggerProbeDistinguisher : public Distinguisher {
 public:
  explicit TriggerProbeDistinguisher(int probes = 256, std::uint64_t seed = 1) : probes_(probes), seed_(seed) {}
  std::string name() const override { return "trigger-probe"; }
  int guess(const GameView& view, Rng& rng) override;
  void calibrate(std::span<const nn::Model> clean, std::span<const nn::Model> marked, const wm::SchemeConfig& scfg) override;
  double statistic(const nn::Model& m, const wm::SchemeConfig& scfg) const;

 private:
  int probes_;
  std::uint64_t seed_;
  double threshold_ = 0.0;
  bool above_means_marked_ = true;
  bool calibrated_ = false;
};

std::unique_ptr<Distinguisher> make_distinguisher(const std::string& name);

/// Shared material for every game: a pool of independently trained clean
/// models on one benchmark, and the embedding settings.
struct GameSetup {
  bench::Benchmark bench;
  std::vector<nn::Model> clean_pool;
  std::uint64_t seed = 0;
};

GameSetup make_game_setup(const bench::Benchmark& b, int pool_size, std::uint64_t seed);

struct GameOptions {
  bool keep_transcript = false;
  /// Test hook: receives the hidden bit before the distinguisher guesses.
  std::function<void(int)> bit_tap;
};

GameOutcome run_covertness_game(wm::SchemeId scheme, Distinguisher& d, int trials, const GameSetup& setup,
                                const GameOptions& opts = {});
/// Same engine and seeds as the covertness game, framed as the purchaser's test.
GameOutcome run_clean_game(wm::SchemeId scheme, Distinguisher& prover, int trials, const GameSetup& setup,
                           const GameOptions& opts = {});
GameOutcome run_key_pp_game(wm::SchemeId scheme, Distinguisher& d, int trials, const GameSetup& setup,
                            const GameOptions& opts = {});

/// Adversary for the spoil game: gets (M_WM, key, verify) and returns M_spoiled.
using SpoilAdversary = std::function<nn::Model(const nn::Model& m_wm, const wm::WatermarkKey& key,
                                               const wm::Verifier& verifier, const nn::Dataset& data, std::uint64_t seed)>;

/// The shipped spoil attack with the given budget.
SpoilAdversary shipped_spoiler(const AttackBudget& budget, const wm::SchemeConfig& scfg);

/// Win iff verify(M_spoiled, key) = 0 and test accuracy falls by at most delta
/// relative to M_WM; both clauses are re-checked here.
GameOutcome run_spoil_game(wm::SchemeId scheme, double delta, int trials, const GameSetup& setup,
                           const SpoilAdversary& adversary, const GameOptions& opts = {});

}  // namespace ovnet::adv
