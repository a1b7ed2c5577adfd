#include "ovnet/nn/dataset.hpp"

#include <cmath>
#include <numeric>

#include "ovnet/common.hpp"
#include "ovnet/rng.hpp"

namespace ovnet::nn {

void Dataset::validate() const {
  if (n_classes < 1) throw ShapeError("dataset needs at least one class");
  if (inputs.rows() < 1) throw ShapeError("dataset is empty");
  if (labels.size() != inputs.rows()) throw ShapeError("label count does not match rows");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) < 0 || labels(i) >= n_classes) throw ShapeError("label out of range");
}

Dataset make_blobs(int n_classes, int n_per_class, int dim, double spread, std::uint64_t seed) {
  if (n_classes < 1 || n_per_class < 1 || dim < 1 || spread < 0.0)
    throw InvalidParameter("make_blobs arguments must be positive");
  Rng rng(derive_seed(seed, {0xb10b5}));
  Eigen::MatrixXd centers(n_classes, dim);
  for (int c = 0; c < n_classes; ++c)
    for (int j = 0; j < dim; ++j) centers(c, j) = rng.uniform(-1.0, 1.0);

  Dataset d;
  d.n_classes = n_classes;
  d.inputs.resize(Eigen::Index{n_classes} * n_per_class, dim);
  d.labels.resize(d.inputs.rows());
  Eigen::Index row = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < n_per_class; ++i, ++row) {
      for (int j = 0; j < dim; ++j) d.inputs(row, j) = centers(c, j) + spread * rng.normal();
      d.labels(row) = c;
    }
  }
  return d;
}

Dataset subset(const Dataset& d, const std::vector<Eigen::Index>& rows) {
  Dataset out;
  out.n_classes = d.n_classes;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), d.dim());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = d.inputs.row(rows[i]);
    out.labels(static_cast<Eigen::Index>(i)) = d.labels(rows[i]);
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidParameter("split fraction must be in (0,1)");
  Rng rng(derive_seed(seed, {0x5911}));
  std::vector<Eigen::Index> first, second;
  for (int c = 0; c < d.n_classes; ++c) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (d.labels(i) == c) rows.push_back(i);
    rng.shuffle(std::span(rows));
    const auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(rows.size())));
    first.insert(first.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
    second.insert(second.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
  }
  return {subset(d, first), subset(d, second)};
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.size() == 0) return b;
  if (b.size() == 0) return a;
  if (a.dim() != b.dim()) throw ShapeError("cannot concatenate datasets of different width");
  Dataset out;
  out.n_classes = std::max(a.n_classes, b.n_classes);
  out.inputs.resize(a.size() + b.size(), a.dim());
  out.inputs << a.inputs, b.inputs;
  out.labels.resize(a.size() + b.size());
  out.labels << a.labels, b.labels;
  return out;
}

std::vector<Dataset> partition(const Dataset& d, int k, std::uint64_t seed) {
  if (k < 1 || k > d.size()) throw InvalidParameter("cannot partition into that many shards");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(d.size()));
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(derive_seed(seed, {0x9a27}));
  rng.shuffle(std::span(rows));
  std::vector<Dataset> shards;
  for (int s = 0; s < k; ++s) {
    std::vector<Eigen::Index> mine;
    for (std::size_t i = static_cast<std::size_t>(s); i < rows.size(); i += static_cast<std::size_t>(k))
      mine.push_back(rows[i]);
    shards.push_back(subset(d, mine));
  }
  return shards;
}

}  // namespace ovnet::nn
