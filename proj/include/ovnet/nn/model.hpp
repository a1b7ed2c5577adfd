#pragma once

#include <Eigen/Core>

#include "ovnet/nn/arch.hpp"

namespace ovnet::nn {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct BasicModel {
  ArchDescriptor arch;
  Vec<Scalar> params;

  template <typename Other>
  BasicModel<Other> cast() const {
    return {arch, params.template cast<Other>()};
  }
};

using Model = BasicModel<double>;

/// Fresh model with parameters drawn from arch.seed (He-uniform weights, zero biases).
Model init_model(const ArchDescriptor& arch);

/// Throws ShapeError if params do not match arch or contain non-finite values.
void check_model(const Model& m);

/// Canonical binary layout: arch bytes, u64 param count, little-endian f64 params.
Bytes serialize(const Model& m);
Model deserialize_model(ByteView b);

bool bit_identical(const Model& a, const Model& b);

}  // namespace ovnet::nn
