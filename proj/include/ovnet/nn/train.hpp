#pragma once

#include <cstdint>
#include <functional>

#include "ovnet/nn/dataset.hpp"
#include "ovnet/nn/model.hpp"

namespace ovnet::nn {

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.1;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate(const Dataset& d) const;
};

/// Called after every SGD step with the updated parameters. Returning false
/// ends the epoch early.
using StepHook = std::function<bool(Vec<double>& params)>;

/// One shuffled pass of minibatch cross-entropy SGD. The last batch may be
/// short. Returns false if the hook stopped the pass.
bool sgd_epoch(Model& m, const Dataset& data, double lr, int batch_size, std::uint64_t shuffle_seed,
               const StepHook& after_step = {});

/// Minibatch SGD on mean cross-entropy. Deterministic in (model, data, cfg).
Model train(Model model, const Dataset& data, const TrainConfig& cfg);

/// Fraction of argmax-correct rows.
double accuracy(const Model& m, const Dataset& data);

double loss(const Model& m, const Dataset& data);

}  // namespace ovnet::nn
