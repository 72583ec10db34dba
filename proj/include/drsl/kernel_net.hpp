#pragma once
/** \file
    The multilayer kernel f(x; theta): affine layers with a componentwise
    activation on every hidden layer and a linear output layer.

    A batch is an (n x V_org) matrix with one sample per row; every routine
    maps row i of the input to row i of the output.
*/

#include "drsl/data_model.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace drsl {

template <class Scalar>
struct BasicForwardTrace {
  /// activations[0] is the input batch, activations.back() the network output.
  std::vector<Mat<Scalar>> activations;
  /// pre_activations[m] feeds activations[m + 1].
  std::vector<Mat<Scalar>> pre_activations;

  const Mat<Scalar>& output() const { return activations.back(); }
};

/// Same layout as the parameters they differentiate.
template <class Scalar>
using BasicParameterGradients = BasicNetworkParameters<Scalar>;

using ForwardTrace = BasicForwardTrace<double>;
using ParameterGradients = BasicParameterGradients<double>;

template <class Scalar>
Scalar activate(Activation g, Scalar z) {
  switch (g) {
    case Activation::sigmoid: return Scalar(1) / (Scalar(1) + std::exp(-z));
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > Scalar(0) ? z : Scalar(0);
  }
  return z;
}

/// Derivative expressed through the pre-activation z and activation a = g(z).
template <class Scalar>
Scalar activate_derivative(Activation g, Scalar z, Scalar a) {
  switch (g) {
    case Activation::sigmoid: return a * (Scalar(1) - a);
    case Activation::tanh: return Scalar(1) - a * a;
    case Activation::relu: return z > Scalar(0) ? Scalar(1) : Scalar(0);
  }
  return Scalar(1);
}

inline void check_architecture(const std::vector<Index>& layer_sizes) {
  require(layer_sizes.size() >= 3, Errc::BadArchitecture, "need at least one hidden layer (C >= 3)");
  for (Index u : layer_sizes) require(u >= 1, Errc::BadArchitecture, "layer widths must be >= 1");
}

template <class Scalar = double>
BasicNetworkParameters<Scalar> init_params(const std::vector<Index>& layer_sizes, InitScheme scheme,
                                           std::uint64_t seed) {
  check_architecture(layer_sizes);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  BasicNetworkParameters<Scalar> p;
  p.layer_sizes = layer_sizes;
  for (std::size_t m = 0; m + 1 < layer_sizes.size(); ++m) {
    const Index fan_in = layer_sizes[m];
    const Index fan_out = layer_sizes[m + 1];
    const double sd = scheme == InitScheme::unit_normal ? 1.0 : 1.0 / std::sqrt(static_cast<double>(fan_in));
    DenseLayer<Scalar> layer{Mat<Scalar>(fan_out, fan_in), Vec<Scalar>(fan_out)};
    for (Index c = 0; c < fan_in; ++c)
      for (Index r = 0; r < fan_out; ++r) layer.weight(r, c) = static_cast<Scalar>(sd * normal(rng));
    for (Index r = 0; r < fan_out; ++r) layer.bias(r) = static_cast<Scalar>(sd * normal(rng));
    p.layers.push_back(std::move(layer));
  }
  return p;
}

template <class Scalar>
BasicNetworkParameters<Scalar> zeros_like(const BasicNetworkParameters<Scalar>& p) {
  BasicNetworkParameters<Scalar> z;
  z.layer_sizes = p.layer_sizes;
  for (const auto& l : p.layers)
    z.layers.push_back({Mat<Scalar>::Zero(l.weight.rows(), l.weight.cols()), Vec<Scalar>::Zero(l.bias.size())});
  return z;
}

template <class Scalar>
bool same_shape(const BasicNetworkParameters<Scalar>& a, const BasicNetworkParameters<Scalar>& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t m = 0; m < a.layers.size(); ++m) {
    if (a.layers[m].weight.rows() != b.layers[m].weight.rows() ||
        a.layers[m].weight.cols() != b.layers[m].weight.cols() ||
        a.layers[m].bias.size() != b.layers[m].bias.size())
      return false;
  }
  return true;
}

template <class Scalar, class Derived>
BasicForwardTrace<Scalar> forward_trace(const BasicNetworkParameters<Scalar>& params,
                                        const Eigen::MatrixBase<Derived>& batch, Activation g) {
  require(!params.layers.empty(), Errc::BadArchitecture, "network has no layers");
  require(batch.cols() == params.input_size(), Errc::ShapeMismatch,
          "batch width " + std::to_string(batch.cols()) + " != input size " + std::to_string(params.input_size()));
  BasicForwardTrace<Scalar> tr;
  tr.activations.reserve(params.layers.size() + 1);
  tr.pre_activations.reserve(params.layers.size());
  tr.activations.emplace_back(batch);
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t m = 0; m <= last; ++m) {
    const auto& layer = params.layers[m];
    Mat<Scalar> z = tr.activations.back() * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (m == last) {
      tr.pre_activations.push_back(z);
      tr.activations.push_back(std::move(z));
    } else {
      Mat<Scalar> a = z.unaryExpr([g](Scalar v) { return activate(g, v); });
      tr.pre_activations.push_back(std::move(z));
      tr.activations.push_back(std::move(a));
    }
  }
  return tr;
}

/// Network output for every row of `batch` (n x V).
template <class Scalar, class Derived>
Mat<Scalar> forward(const BasicNetworkParameters<Scalar>& params, const Eigen::MatrixBase<Derived>& batch,
                    Activation g) {
  require(!params.layers.empty(), Errc::BadArchitecture, "network has no layers");
  require(batch.cols() == params.input_size(), Errc::ShapeMismatch, "batch width does not match network input");
  Mat<Scalar> h = batch;
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t m = 0; m <= last; ++m) {
    Mat<Scalar> z = h * params.layers[m].weight.transpose();
    z.rowwise() += params.layers[m].bias.transpose();
    if (m != last) z = z.unaryExpr([g](Scalar v) { return activate(g, v); });
    h = std::move(z);
  }
  return h;
}

/// Sum over rows of the squared Euclidean distance between outputs and targets.
template <class Scalar, class Derived, class DerivedT>
Scalar kernel_loss(const BasicNetworkParameters<Scalar>& params, const Eigen::MatrixBase<Derived>& batch,
                   const Eigen::MatrixBase<DerivedT>& targets, Activation g) {
  const Mat<Scalar> out = forward(params, batch, g);
  require(targets.rows() == out.rows() && targets.cols() == out.cols(), Errc::ShapeMismatch,
          "targets do not match network output");
  return (out - targets).squaredNorm();
}

/// Gradient of kernel_loss summed over the batch, reusing a forward trace.
template <class Scalar, class DerivedT>
BasicParameterGradients<Scalar> backprop(const BasicNetworkParameters<Scalar>& params,
                                         const BasicForwardTrace<Scalar>& trace,
                                         const Eigen::MatrixBase<DerivedT>& targets, Activation g) {
  const Mat<Scalar>& out = trace.output();
  require(targets.rows() == out.rows() && targets.cols() == out.cols(), Errc::ShapeMismatch,
          "targets do not match network output");
  BasicParameterGradients<Scalar> grad;
  grad.layer_sizes = params.layer_sizes;
  grad.layers.resize(params.layers.size());

  Mat<Scalar> delta = Scalar(2) * (out - targets);  // dL/dz at the linear output
  for (std::size_t m = params.layers.size(); m-- > 0;) {
    const Mat<Scalar>& input = trace.activations[m];
    grad.layers[m].weight.noalias() = delta.transpose() * input;
    grad.layers[m].bias = delta.colwise().sum().transpose();
    if (m == 0) break;
    Mat<Scalar> upstream = delta * params.layers[m].weight;
    const Mat<Scalar>& z = trace.pre_activations[m - 1];
    const Mat<Scalar>& a = trace.activations[m];
    for (Index c = 0; c < upstream.cols(); ++c)
      for (Index r = 0; r < upstream.rows(); ++r) upstream(r, c) *= activate_derivative(g, z(r, c), a(r, c));
    delta = std::move(upstream);
  }
  return grad;
}

template <class Scalar, class Derived, class DerivedT>
BasicParameterGradients<Scalar> backprop(const BasicNetworkParameters<Scalar>& params,
                                         const Eigen::MatrixBase<Derived>& batch,
                                         const Eigen::MatrixBase<DerivedT>& targets, Activation g) {
  return backprop(params, forward_trace(params, batch, g), targets, g);
}

}  // namespace drsl
