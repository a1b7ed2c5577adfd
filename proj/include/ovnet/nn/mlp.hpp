#pragma once

// Forward and backward passes over the flat parameter layout described in
// arch.hpp. Templated on the scalar so gradient checks can run in extended
// precision.

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "ovnet/common.hpp"
#include "ovnet/nn/model.hpp"

namespace ovnet::nn {

namespace detail {

template <typename Scalar>
struct LayerView {
  Eigen::Map<const RowMat<Scalar>> w;
  Eigen::Map<const Vec<Scalar>> b;
};

template <typename Scalar>
LayerView<Scalar> layer(const ArchDescriptor& arch, const Vec<Scalar>& params, std::size_t l) {
  const auto in = arch.layer_widths[l];
  const auto out = arch.layer_widths[l + 1];
  const auto off = arch.weight_offset(l);
  return {Eigen::Map<const RowMat<Scalar>>(params.data() + off, out, in),
          Eigen::Map<const Vec<Scalar>>(params.data() + off + std::size_t{out} * in, out)};
}

template <typename Scalar>
void activate(Activation a, Mat<Scalar>& z) {
  if (a == Activation::relu)
    z = z.cwiseMax(Scalar(0));
  else
    z = z.array().tanh().matrix();
}

// Derivative of the activation, expressed through its output.
template <typename Scalar>
Mat<Scalar> activation_grad(Activation a, const Mat<Scalar>& out) {
  if (a == Activation::relu) return (out.array() > Scalar(0)).template cast<Scalar>().matrix();
  return (Scalar(1) - out.array().square()).matrix();
}

}  // namespace detail

template <typename Scalar>
void check_shapes(const ArchDescriptor& arch, const Vec<Scalar>& params, Eigen::Index input_cols) {
  if (static_cast<std::size_t>(params.size()) != arch.param_count())
    throw ShapeError("parameter vector does not match architecture");
  if (input_cols != static_cast<Eigen::Index>(arch.input_width()))
    throw ShapeError("input width " + std::to_string(input_cols) + " != architecture input " +
                     std::to_string(arch.input_width()));
}

/// Logits for every row of x (n x d) -> (n x classes).
template <typename Scalar>
Mat<Scalar> logits(const BasicModel<Scalar>& m, const Mat<Scalar>& x) {
  check_shapes(m.arch, m.params, x.cols());
  Mat<Scalar> a = x;
  for (std::size_t l = 0; l < m.arch.n_layers(); ++l) {
    auto [w, b] = detail::layer(m.arch, m.params, l);
    Mat<Scalar> z = a * w.transpose();
    z.rowwise() += b.transpose();
    if (l + 1 < m.arch.n_layers()) detail::activate(m.arch.activation, z);
    a = std::move(z);
  }
  return a;
}

/// Mean cross-entropy over rows of x. When grad is non-null it receives the
/// gradient with respect to the flat parameter vector.
template <typename Scalar>
Scalar cross_entropy(const BasicModel<Scalar>& m, const Mat<Scalar>& x, const Eigen::VectorXi& y,
                     Vec<Scalar>* grad = nullptr) {
  check_shapes(m.arch, m.params, x.cols());
  if (y.size() != x.rows()) throw ShapeError("label count does not match input rows");
  const auto n_layers = m.arch.n_layers();
  const auto n = x.rows();

  std::vector<Mat<Scalar>> acts;
  acts.reserve(n_layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto [w, b] = detail::layer(m.arch, m.params, l);
    Mat<Scalar> z = acts.back() * w.transpose();
    z.rowwise() += b.transpose();
    if (l + 1 < n_layers) detail::activate(m.arch.activation, z);
    acts.push_back(std::move(z));
  }

  Mat<Scalar>& out = acts.back();
  const auto classes = out.cols();
  Scalar loss(0);
  Mat<Scalar> delta(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = y(i);
    if (label < 0 || label >= classes) throw ShapeError("label out of range");
    const Scalar mx = out.row(i).maxCoeff();
    Scalar denom(0);
    for (Eigen::Index c = 0; c < classes; ++c) {
      delta(i, c) = std::exp(out(i, c) - mx);
      denom += delta(i, c);
    }
    loss += std::log(denom) + mx - out(i, label);
    delta.row(i) /= denom;
    delta(i, label) -= Scalar(1);
  }
  loss /= Scalar(n);
  if (!grad) return loss;

  delta /= Scalar(n);
  grad->setZero(m.params.size());
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto in = m.arch.layer_widths[l];
    const auto outw = m.arch.layer_widths[l + 1];
    const auto off = m.arch.weight_offset(l);
    Eigen::Map<RowMat<Scalar>> gw(grad->data() + off, outw, in);
    Eigen::Map<Vec<Scalar>> gb(grad->data() + off + std::size_t{outw} * in, outw);
    gw.noalias() = delta.transpose() * acts[l];
    gb = delta.colwise().sum().transpose();
    if (l > 0) {
      auto [w, b] = detail::layer(m.arch, m.params, l);
      Mat<Scalar> back = delta * w;
      delta = back.cwiseProduct(detail::activation_grad(m.arch.activation, acts[l]));
    }
  }
  return loss;
}

/// Index of the largest logit per row; ties go to the lowest class index.
template <typename Scalar>
Eigen::VectorXi predict(const BasicModel<Scalar>& m, const Mat<Scalar>& x) {
  const Mat<Scalar> z = logits(m, x);
  Eigen::VectorXi out(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < z.cols(); ++c)
      if (z(i, c) > z(i, best)) best = c;
    out(i) = static_cast<int>(best);
  }
  return out;
}

}  // namespace ovnet::nn
