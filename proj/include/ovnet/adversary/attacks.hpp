#pragma once

#include <cstdint>

#include "ovnet/nn/dataset.hpp"
#include "ovnet/nn/model.hpp"
#include "ovnet/nn/train.hpp"
#include "ovnet/wm/scheme.hpp"

namespace ovnet::adv {

struct AttackBudget {
  int tune_epochs = 10;
  double prune_fraction = 0.1;
  double delta = 0.0;  // allowed accuracy decline, in [0, 1]
  double learning_rate = 0.05;
  int batch_size = 32;
  double clean_weight = 1.0;  // lambda: clean-loss regularizer in reverse tuning
  double push = 0.5;          // gradient weight on the white-box verification margin
  double spoil_margin = 2.0;  // white-box spoil pushes every digit this many tolerances away
  std::uint64_t seed = 0;

  void validate() const;
};

/// Continued SGD on clean data for budget.tune_epochs.
nn::Model fine_tune(const nn::Model& model, const nn::Dataset& data, const AttackBudget& budget);

/// Zeroes the `fraction` smallest-magnitude weights (biases are kept). Ties
/// are broken by position.
nn::Model prune(const nn::Model& model, double fraction);

/// Prune, then fine-tune with the pruned weights held at zero.
nn::Model fine_prune(const nn::Model& model, const nn::Dataset& data, const AttackBudget& budget);

struct SpoilFailure : Error {
  using Error::Error;
};

/// Removes the watermark identified by an exposed (key, verifier).
/// TriggerBackdoor: retrain on clean data plus the triggers relabeled away
/// from their targets. ParamEmbed: reverse tuning, i.e. ascend the distance of
/// the addressed parameters from their digits while descending the clean loss.
/// Throws SpoilFailure when the budget runs out with the watermark intact.
nn::Model spoil(const nn::Model& model_wm, const wm::WatermarkKey& key, const wm::Verifier& verifier,
                const nn::Dataset& data, const AttackBudget& budget, const wm::SchemeConfig& scfg = {});

struct OverwriteResult {
  nn::Model model;
  wm::WatermarkKey key;
  wm::Verifier verifier;
};

/// The adversary embeds its own freshly generated key with the same scheme.
OverwriteResult overwrite(const nn::Model& model_wm, wm::SchemeId scheme, const nn::Dataset& data,
                          const nn::TrainConfig& cfg, std::uint64_t key_seed, const wm::SchemeConfig& scfg = {});

/// Embed a given key on top of an existing model (used for self-overwrite checks).
OverwriteResult overwrite_with(const nn::Model& model_wm, const wm::WatermarkKey& key, const nn::Dataset& data,
                               const nn::TrainConfig& cfg, const wm::SchemeConfig& scfg = {});

}  // namespace ovnet::adv
