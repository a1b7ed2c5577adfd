#include "ovnet/bench.hpp"

#include "ovnet/rng.hpp"

namespace ovnet::bench {

nn::TrainConfig Benchmark::train_cfg(std::uint64_t salt) const {
  return {spec.train_epochs, spec.learning_rate, spec.batch_size, derive_seed(seed, {0x7a1, salt})};
}

nn::TrainConfig Benchmark::embed_cfg(std::uint64_t salt) const {
  return {spec.embed_epochs, spec.learning_rate, spec.batch_size, derive_seed(seed, {0xe4b, salt})};
}

Benchmark make_benchmark(std::uint64_t seed, const BenchSpec& spec) {
  Benchmark b;
  b.spec = spec;
  b.seed = seed;
  const auto all = nn::make_blobs(spec.n_classes, spec.n_per_class, spec.dim, spec.spread, derive_seed(seed, {1}));
  std::tie(b.train, b.test) = nn::split(all, spec.train_fraction, derive_seed(seed, {2}));
  b.arch = nn::make_mlp(static_cast<std::uint32_t>(spec.dim), spec.hidden, static_cast<std::uint32_t>(spec.n_classes),
                        spec.activation, derive_seed(seed, {3}));
  b.clean = nn::train(nn::init_model(b.arch), b.train, b.train_cfg());
  b.clean_accuracy = nn::accuracy(b.clean, b.test);
  return b;
}

}  // namespace ovnet::bench
