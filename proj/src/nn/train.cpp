#include "ovnet/nn/train.hpp"

#include <numeric>

#include "ovnet/nn/mlp.hpp"
#include "ovnet/rng.hpp"

namespace ovnet::nn {

void TrainConfig::validate(const Dataset& d) const {
  if (epochs < 0) throw InvalidParameter("epochs must be non-negative");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InvalidParameter("learning rate must be in (0,1]");
  if (batch_size < 1) throw InvalidParameter("batch size must be positive");
  if (batch_size > d.size()) throw InvalidParameter("batch size exceeds dataset size");
}

bool sgd_epoch(Model& m, const Dataset& data, double lr, int batch_size, std::uint64_t shuffle_seed,
               const StepHook& after_step) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(shuffle_seed);
  rng.shuffle(std::span(order));

  Eigen::MatrixXd xb;
  Eigen::VectorXi yb;
  Vec<double> grad;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    const auto nb = static_cast<Eigen::Index>(end - start);
    xb.resize(nb, data.dim());
    yb.resize(nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
      xb.row(i) = data.inputs.row(order[start + static_cast<std::size_t>(i)]);
      yb(i) = data.labels(order[start + static_cast<std::size_t>(i)]);
    }
    cross_entropy(m, xb, yb, &grad);
    m.params -= lr * grad;
    if (after_step && !after_step(m.params)) return false;
  }
  return true;
}

Model train(Model model, const Dataset& data, const TrainConfig& cfg) {
  data.validate();
  cfg.validate(data);
  check_shapes(model.arch, model.params, data.dim());
  if (static_cast<int>(model.arch.output_width()) != data.n_classes)
    throw ShapeError("model output width does not match dataset classes");
  for (int e = 0; e < cfg.epochs; ++e)
    sgd_epoch(model, data, cfg.learning_rate, cfg.batch_size, derive_seed(cfg.seed, {static_cast<std::uint64_t>(e)}));
  return model;
}

double accuracy(const Model& m, const Dataset& data) {
  if (data.labels.size() != data.inputs.rows()) throw ShapeError("label count does not match rows");
  if (data.n_classes != static_cast<int>(m.arch.output_width()))
    throw ShapeError("model output width does not match dataset classes");
  if (data.size() == 0) return 0.0;
  const auto pred = predict(m, data.inputs);
  return static_cast<double>((pred.array() == data.labels.array()).count()) / static_cast<double>(data.size());
}

double loss(const Model& m, const Dataset& data) { return cross_entropy(m, data.inputs, data.labels); }

}  // namespace ovnet::nn
