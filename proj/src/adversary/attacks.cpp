#include "ovnet/adversary/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ovnet/rng.hpp"

namespace ovnet::adv {

void AttackBudget::validate() const {
  if (tune_epochs < 0) throw InvalidParameter("tune_epochs must be non-negative");
  if (!(prune_fraction >= 0.0 && prune_fraction < 1.0)) throw InvalidParameter("prune fraction must be in [0,1)");
  if (delta < 0.0) throw InvalidParameter("delta must be non-negative");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InvalidParameter("learning rate must be in (0,1]");
}

nn::Model fine_tune(const nn::Model& model, const nn::Dataset& data, const AttackBudget& budget) {
  budget.validate();
  return nn::train(model, data, {budget.tune_epochs, budget.learning_rate, budget.batch_size, derive_seed(budget.seed, {0xf7})});
}

namespace {

std::vector<Eigen::Index> prune_mask(const nn::Model& model, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidParameter("prune fraction must be in [0,1)");
  std::vector<Eigen::Index> weights;
  for (Eigen::Index i = 0; i < model.params.size(); ++i)
    if (model.arch.is_weight(static_cast<std::size_t>(i))) weights.push_back(i);
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(weights.size())));
  std::stable_sort(weights.begin(), weights.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(model.params(a)) < std::abs(model.params(b));
  });
  weights.resize(k);
  return weights;
}

}  // namespace

nn::Model prune(const nn::Model& model, double fraction) {
  nn::check_model(model);
  nn::Model out = model;
  for (auto i : prune_mask(model, fraction)) out.params(i) = 0.0;
  return out;
}

nn::Model fine_prune(const nn::Model& model, const nn::Dataset& data, const AttackBudget& budget) {
  budget.validate();
  const auto mask = prune_mask(model, budget.prune_fraction);
  nn::Model m = model;
  for (auto i : mask) m.params(i) = 0.0;
  for (int e = 0; e < budget.tune_epochs; ++e)
    nn::sgd_epoch(m, data, budget.learning_rate, budget.batch_size, derive_seed(budget.seed, {0xf9, static_cast<std::uint64_t>(e)}),
                  [&](nn::Vec<double>& p) {
                    for (auto i : mask) p(i) = 0.0;
                    return true;
                  });
  return m;
}

nn::Model spoil(const nn::Model& model_wm, const wm::WatermarkKey& key, const wm::Verifier& verifier,
                const nn::Dataset& data, const AttackBudget& budget, const wm::SchemeConfig& scfg) {
  budget.validate();
  nn::Model m = model_wm;
  if (key.scheme == wm::SchemeId::ParamEmbed) {
    const auto& p = key.params();
    const double goal = budget.spoil_margin * verifier.tolerance;
    auto far_enough = [&](const nn::Vec<double>& params) {
      for (std::size_t i = 0; i < p.indices.size(); ++i)
        if (std::abs(params(static_cast<Eigen::Index>(p.indices[i])) - p.digits[i]) < goal) return false;
      return true;
    };
    // Descent on clean_weight * CE - push * sum |theta_i - digit_i|.
    const double clean_lr = budget.learning_rate * budget.clean_weight;
    const double step = budget.learning_rate * budget.push;
    for (int e = 0; e < budget.tune_epochs && !far_enough(m.params); ++e) {
      nn::sgd_epoch(m, data, clean_lr, budget.batch_size, derive_seed(budget.seed, {0x5b0, static_cast<std::uint64_t>(e)}),
                    [&](nn::Vec<double>& params) {
                      for (std::size_t i = 0; i < p.indices.size(); ++i) {
                        auto& v = params(static_cast<Eigen::Index>(p.indices[i]));
                        if (std::abs(v - p.digits[i]) >= goal) continue;
                        v += (v >= p.digits[i] ? step : -step);
                      }
                      return !far_enough(params);
                    });
    }
  } else {
    const auto& t = key.triggers();
    const int classes = data.n_classes;
    if (classes < 2) throw InvalidParameter("cannot relabel triggers with a single class");
    Rng rng(derive_seed(budget.seed, {0x5b1}));
    nn::Dataset relabeled{t.inputs, t.labels, classes};
    for (Eigen::Index i = 0; i < relabeled.labels.size(); ++i) {
      const int shift = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(classes - 1)));
      relabeled.labels(i) = (t.labels(i) + shift) % classes;
    }
    nn::Dataset mixed = data;
    for (int r = 0; r < scfg.trigger_repeat; ++r) mixed = nn::concat(mixed, relabeled);
    for (int e = 0; e < budget.tune_epochs && wm::verify(m, key, verifier); ++e)
      nn::sgd_epoch(m, mixed, budget.learning_rate, budget.batch_size, derive_seed(budget.seed, {0x5b2, static_cast<std::uint64_t>(e)}));
  }
  if (wm::verify(m, key, verifier))
    throw SpoilFailure("watermark still verifies after " + std::to_string(budget.tune_epochs) + " spoil epochs");
  return m;
}

OverwriteResult overwrite_with(const nn::Model& model_wm, const wm::WatermarkKey& key, const nn::Dataset& data,
                               const nn::TrainConfig& cfg, const wm::SchemeConfig& scfg) {
  auto r = wm::embed(model_wm, key, data, cfg, scfg);
  return {std::move(r.model), key, r.verifier};
}

OverwriteResult overwrite(const nn::Model& model_wm, wm::SchemeId scheme, const nn::Dataset& data,
                          const nn::TrainConfig& cfg, std::uint64_t key_seed, const wm::SchemeConfig& scfg) {
  const auto key = wm::gen(scheme, scfg.security_bits, model_wm.arch, key_seed, scfg);
  return overwrite_with(model_wm, key, data, cfg, scfg);
}

}  // namespace ovnet::adv
