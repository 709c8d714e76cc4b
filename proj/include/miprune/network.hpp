#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "miprune/errors.hpp"
#include "miprune/types.hpp"

namespace miprune {

enum class Activation : uint8_t { Identity = 0, ReLU = 1 };

// One affine layer. Row m of `weights` holds the incoming weights of output
// neuron m, so a batch maps as X * W^T + b^T.
template <typename Scalar>
struct LinearLayer {
  Mat<Scalar> weights;  // out_dim x in_dim
  Vec<Scalar> bias;     // out_dim
  Activation activation = Activation::ReLU;

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
};

// Fully-connected network. Layers are stored in forward order; by convention
// trained nets use ReLU on hidden layers and Identity (logits) on the last.
template <typename Scalar>
struct Network {
  std::vector<LinearLayer<Scalar>> layers;
  Index input_dim = 0;

  Index depth() const { return static_cast<Index>(layers.size()); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  // Widths of x_0..x_L.
  std::vector<Index> dims() const {
    std::vector<Index> d;
    d.push_back(input_dim);
    for (const auto& l : layers) d.push_back(l.out_dim());
    return d;
  }

  void validate() const {
    if (layers.empty()) throw ShapeError("network has no layers");
    if (input_dim < 1) throw ShapeError("network input_dim must be >= 1");
    Index width = input_dim;
    for (size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.out_dim() < 1) {
        throw ShapeError("layer " + std::to_string(i + 1) + " has zero width");
      }
      if (l.in_dim() != width) {
        throw ShapeError("layer " + std::to_string(i + 1) + " expects input of dim " +
                         std::to_string(l.in_dim()) + " but previous width is " +
                         std::to_string(width));
      }
      if (l.bias.size() != l.out_dim()) {
        throw ShapeError("layer " + std::to_string(i + 1) + " bias length " +
                         std::to_string(l.bias.size()) + " != out_dim " +
                         std::to_string(l.out_dim()));
      }
      width = l.out_dim();
    }
  }
};

using Networkf = Network<float>;
using Networkd = Network<double>;

template <typename Scalar, typename Derived>
Mat<Scalar> apply_layer(const LinearLayer<Scalar>& layer,
                        const Eigen::MatrixBase<Derived>& input) {
  Mat<Scalar> z = (input * layer.weights.transpose()).rowwise() + layer.bias.transpose();
  if (layer.activation == Activation::ReLU) {
    z = z.cwiseMax(Scalar(0));
  }
  return z;
}

// Forward pass caching every post-activation output x_1..x_L.
template <typename Scalar>
std::vector<Mat<Scalar>> forward_all(const Network<Scalar>& net, const Mat<Scalar>& batch) {
  if (batch.cols() != net.input_dim) {
    throw ShapeError("layer 1 expects input of dim " + std::to_string(net.input_dim) +
                     " but batch has " + std::to_string(batch.cols()) + " columns");
  }
  std::vector<Mat<Scalar>> outputs;
  outputs.reserve(net.layers.size());
  const Mat<Scalar>* cur = &batch;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    if (layer.in_dim() != cur->cols()) {
      throw ShapeError("layer " + std::to_string(i + 1) + " expects input of dim " +
                       std::to_string(layer.in_dim()) + " but got " +
                       std::to_string(cur->cols()));
    }
    outputs.push_back(apply_layer(layer, *cur));
    cur = &outputs.back();
  }
  return outputs;
}

// Final-layer output only (logits for trained nets).
template <typename Scalar>
Mat<Scalar> forward(const Network<Scalar>& net, const Mat<Scalar>& batch) {
  auto outs = forward_all(net, batch);
  return std::move(outs.back());
}

template <typename Scalar>
bool all_finite(const Network<Scalar>& net) {
  for (const auto& l : net.layers) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

template <typename Scalar>
bool bitwise_equal(const Network<Scalar>& a, const Network<Scalar>& b) {
  if (a.input_dim != b.input_dim || a.layers.size() != b.layers.size()) return false;
  for (size_t i = 0; i < a.layers.size(); ++i) {
    const auto& la = a.layers[i];
    const auto& lb = b.layers[i];
    if (la.activation != lb.activation) return false;
    if (la.weights.rows() != lb.weights.rows() || la.weights.cols() != lb.weights.cols())
      return false;
    if (std::memcmp(la.weights.data(), lb.weights.data(),
                    sizeof(Scalar) * la.weights.size()) != 0)
      return false;
    if (la.bias.size() != lb.bias.size()) return false;
    if (std::memcmp(la.bias.data(), lb.bias.data(), sizeof(Scalar) * la.bias.size()) != 0)
      return false;
  }
  return true;
}

// Cast helper (float nets for the pipeline, double nets for numeric checks).
template <typename To, typename From>
Network<To> cast_network(const Network<From>& net) {
  Network<To> out;
  out.input_dim = net.input_dim;
  out.layers.reserve(net.layers.size());
  for (const auto& l : net.layers) {
    LinearLayer<To> nl;
    nl.weights = l.weights.template cast<To>();
    nl.bias = l.bias.template cast<To>();
    nl.activation = l.activation;
    out.layers.push_back(std::move(nl));
  }
  return out;
}

}  // namespace miprune
