#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace ovnet::nn {

struct Dataset {
  Eigen::MatrixXd inputs;  // n x d
  Eigen::VectorXi labels;  // n
  int n_classes = 0;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  void validate() const;
};

/// Gaussian blobs: class c is centered at a point drawn uniformly from
/// [-1,1]^dim and its points add isotropic noise of standard deviation
/// `spread`. Rows are class-major.
Dataset make_blobs(int n_classes, int n_per_class, int dim, double spread, std::uint64_t seed);

/// Per-class split; the first part gets round(fraction * class size) rows of each class.
std::pair<Dataset, Dataset> split(const Dataset& d, double fraction, std::uint64_t seed);

Dataset concat(const Dataset& a, const Dataset& b);
Dataset subset(const Dataset& d, const std::vector<Eigen::Index>& rows);

/// Partition into k disjoint, near-equal shards after a seeded shuffle.
std::vector<Dataset> partition(const Dataset& d, int k, std::uint64_t seed);

}  // namespace ovnet::nn
