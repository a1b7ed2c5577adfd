#pragma once

#include <cstdint>
#include <vector>

#include "ovnet/nn/dataset.hpp"
#include "ovnet/nn/model.hpp"
#include "ovnet/nn/train.hpp"
#include "ovnet/wm/scheme.hpp"

namespace ovnet::bench {

/// Shape of the desk-scale benchmark: 4-class Gaussian blobs in 16
/// dimensions and a 16-64-64-4 ReLU classifier.
struct BenchSpec {
  int n_classes = 4;
  int n_per_class = 150;
  int dim = 16;
  double spread = 0.8;
  double train_fraction = 2.0 / 3.0;
  std::vector<std::uint32_t> hidden = {64, 64};
  nn::Activation activation = nn::Activation::relu;
  int train_epochs = 30;
  int embed_epochs = 80;  // embedding cap; also the fine-tuning budget bound
  double learning_rate = 0.05;
  int batch_size = 32;
  wm::SchemeConfig scheme;
};

struct Benchmark {
  BenchSpec spec;
  std::uint64_t seed = 0;
  nn::Dataset train;
  nn::Dataset test;
  nn::ArchDescriptor arch;
  nn::Model clean;
  double clean_accuracy = 0.0;  // on test

  nn::TrainConfig train_cfg(std::uint64_t salt = 0) const;
  nn::TrainConfig embed_cfg(std::uint64_t salt = 0) const;
  double clean_error() const { return 1.0 - clean_accuracy; }
};

/// Dataset, architecture and a trained clean model, all derived from `seed`.
Benchmark make_benchmark(std::uint64_t seed, const BenchSpec& spec = {});

}  // namespace ovnet::bench
