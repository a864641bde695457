#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "scrl/mdp/finite_mdp.hpp"
#include "scrl/rng.hpp"

namespace scrl::diff {

// Fully connected network with ReLU hidden layers and an identity output
// layer.  Parameters live in one flat vector (per layer: weight matrix in
// column-major order, then bias) so optimizers, Polyak blends, checkpoints,
// and finite-difference probes all address the same storage.
template <typename Scalar = double>
struct MlpT {
  std::vector<int> layer_sizes;  // [input, hidden..., output]
  VectorX<Scalar> params;

  int n_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int in_dim() const { return layer_sizes.front(); }
  int out_dim() const { return layer_sizes.back(); }

  static int param_count(const std::vector<int>& sizes) {
    int n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
      n += sizes[l + 1] * sizes[l] + sizes[l + 1];
    return n;
  }

  int weight_offset(int layer) const {
    int off = 0;
    for (int l = 0; l < layer; ++l)
      off += layer_sizes[l + 1] * layer_sizes[l] + layer_sizes[l + 1];
    return off;
  }

  int bias_offset(int layer) const {
    return weight_offset(layer) + layer_sizes[layer + 1] * layer_sizes[layer];
  }

  Eigen::Map<MatrixX<Scalar>> weight(int layer) {
    return {params.data() + weight_offset(layer), layer_sizes[layer + 1],
            layer_sizes[layer]};
  }
  Eigen::Map<const MatrixX<Scalar>> weight(int layer) const {
    return {params.data() + weight_offset(layer), layer_sizes[layer + 1],
            layer_sizes[layer]};
  }
  Eigen::Map<VectorX<Scalar>> bias(int layer) {
    return {params.data() + bias_offset(layer), layer_sizes[layer + 1]};
  }
  Eigen::Map<const VectorX<Scalar>> bias(int layer) const {
    return {params.data() + bias_offset(layer), layer_sizes[layer + 1]};
  }

  void validate() const {
    if (layer_sizes.size() < 2)
      throw std::invalid_argument("mlp: need at least input and output sizes");
    for (int s : layer_sizes)
      if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
    if (params.size() != param_count(layer_sizes))
      throw std::invalid_argument("mlp: parameter vector has " +
                                  std::to_string(params.size()) +
                                  " entries, layout needs " +
                                  std::to_string(param_count(layer_sizes)));
    if (!params.allFinite())
      throw std::invalid_argument("mlp: non-finite parameter");
  }
};

using Mlp = MlpT<double>;

// Fan-in uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and
// biases alike.  Coefficients are drawn in flat-storage order, so the layout
// above fixes the draw sequence and two nets built from equal streams are
// bit-identical.
template <typename Scalar = double>
MlpT<Scalar> mlp_init(Rng& rng, const std::vector<int>& layer_sizes) {
  MlpT<Scalar> net;
  net.layer_sizes = layer_sizes;
  net.params.resize(MlpT<Scalar>::param_count(layer_sizes));
  for (int l = 0; l + 1 < static_cast<int>(layer_sizes.size()); ++l) {
    const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(layer_sizes[l]));
    const int begin = net.weight_offset(l);
    const int end = net.bias_offset(l) + layer_sizes[l + 1];
    for (int i = begin; i < end; ++i)
      net.params[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
  net.validate();
  return net;
}

// Forward-pass intermediates kept for the backward pass.  pre[l] holds the
// pre-activation of layer l; hidden activations are recomputed from pre[l]
// on the way back (relu is cheap, and the mask convention relu'(0) = 0 reads
// directly off pre[l] > 0).
template <typename Scalar = double>
struct MlpCacheT {
  MatrixX<Scalar> input;               // in_dim x batch
  std::vector<MatrixX<Scalar>> pre;    // one per layer, rows = layer output
};

// Parameter and input gradients of sum_b upstream(:,b) . output(:,b), plus
// the forward values that produced them.
template <typename Scalar = double>
struct MlpBatchGradT {
  VectorX<Scalar> d_params;   // summed over the batch
  MatrixX<Scalar> d_input;    // in_dim x batch, per-sample
};

// Scalar-projection gradient of one forward pass: value = upstream . output.
template <typename Scalar = double>
struct GradientBundleT {
  Scalar value;
  VectorX<Scalar> d_params;
  VectorX<Scalar> d_input;
};

using GradientBundle = GradientBundleT<double>;

namespace detail {

template <typename Scalar>
void check_input_rows(const MlpT<Scalar>& net, Eigen::Index rows) {
  if (rows != net.in_dim())
    throw std::invalid_argument("mlp: input has " + std::to_string(rows) +
                                " rows, network expects " +
                                std::to_string(net.in_dim()));
}

}  // namespace detail

// Batched forward pass; samples are columns.  Fills the cache and returns
// the output matrix (out_dim x batch).
template <typename Scalar, typename Derived>
MatrixX<Scalar> mlp_forward_batch(const MlpT<Scalar>& net,
                                  const Eigen::MatrixBase<Derived>& input,
                                  MlpCacheT<Scalar>& cache) {
  detail::check_input_rows(net, input.rows());
  const int layers = net.n_layers();
  cache.input = input;
  cache.pre.assign(layers, MatrixX<Scalar>());
  MatrixX<Scalar> act = cache.input;
  for (int l = 0; l < layers; ++l) {
    cache.pre[l].noalias() = net.weight(l) * act;
    cache.pre[l].colwise() += net.bias(l);
    if (l + 1 < layers)
      act = cache.pre[l].array().max(Scalar(0)).matrix();
  }
  return cache.pre.back();
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> mlp_forward_batch(const MlpT<Scalar>& net,
                                  const Eigen::MatrixBase<Derived>& input) {
  MlpCacheT<Scalar> cache;
  return mlp_forward_batch(net, input, cache);
}

// Single-sample forward pass.
template <typename Scalar, typename Derived>
VectorX<Scalar> mlp_forward(const MlpT<Scalar>& net,
                            const Eigen::MatrixBase<Derived>& x) {
  return mlp_forward_batch(net, x.reshaped(x.size(), 1));
}

// Reverse pass over a cached forward.  upstream has one column per sample;
// d_params accumulates the batch sum, d_input stays per-sample.
template <typename Scalar, typename Derived>
MlpBatchGradT<Scalar> mlp_backward_batch(const MlpT<Scalar>& net,
                                         const MlpCacheT<Scalar>& cache,
                                         const Eigen::MatrixBase<Derived>& upstream) {
  const int layers = net.n_layers();
  if (upstream.rows() != net.out_dim() || upstream.cols() != cache.input.cols())
    throw std::invalid_argument("mlp: upstream shape does not match forward pass");

  MlpBatchGradT<Scalar> grad;
  grad.d_params = VectorX<Scalar>::Zero(net.params.size());

  MatrixX<Scalar> delta = upstream;  // gradient at pre[l]
  for (int l = layers - 1; l >= 0; --l) {
    auto d_weight = Eigen::Map<MatrixX<Scalar>>(
        grad.d_params.data() + net.weight_offset(l), net.layer_sizes[l + 1],
        net.layer_sizes[l]);
    auto d_bias = Eigen::Map<VectorX<Scalar>>(
        grad.d_params.data() + net.bias_offset(l), net.layer_sizes[l + 1]);
    if (l == 0) {
      d_weight.noalias() = delta * cache.input.transpose();
    } else {
      d_weight.noalias() =
          delta * cache.pre[l - 1].array().max(Scalar(0)).matrix().transpose();
    }
    d_bias = delta.rowwise().sum();
    if (l == 0) {
      grad.d_input.noalias() = net.weight(0).transpose() * delta;
    } else {
      MatrixX<Scalar> back;
      back.noalias() = net.weight(l).transpose() * delta;
      delta = (cache.pre[l - 1].array() > Scalar(0))
                  .select(back, MatrixX<Scalar>::Zero(back.rows(), back.cols()));
    }
  }
  return grad;
}

// Gradients of upstream . output with respect to parameters and input.
template <typename Scalar, typename D1, typename D2>
GradientBundleT<Scalar> mlp_backward(const MlpT<Scalar>& net,
                                     const Eigen::MatrixBase<D1>& x,
                                     const Eigen::MatrixBase<D2>& upstream) {
  if (upstream.size() != net.out_dim())
    throw std::invalid_argument("mlp: upstream has " +
                                std::to_string(upstream.size()) +
                                " entries, network emits " +
                                std::to_string(net.out_dim()));
  MlpCacheT<Scalar> cache;
  const MatrixX<Scalar> out =
      mlp_forward_batch(net, x.reshaped(x.size(), 1), cache);
  const auto batch =
      mlp_backward_batch(net, cache, upstream.reshaped(upstream.size(), 1));

  GradientBundleT<Scalar> bundle;
  bundle.value = Scalar(0);
  for (int i = 0; i < out.rows(); ++i)
    bundle.value += upstream(i) * out(i, 0);
  bundle.d_params = batch.d_params;
  bundle.d_input = batch.d_input.col(0);
  return bundle;
}

}  // namespace scrl::diff
