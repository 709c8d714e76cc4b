#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "miprune/dataset.hpp"
#include "miprune/errors.hpp"
#include "miprune/network.hpp"
#include "miprune/rng.hpp"

namespace miprune {

struct TrainConfig {
  int epochs = 200;
  double initial_lr = 1e-3;
  double lr_decay_gamma = 0.99;  // multiplicative per-epoch decay
  double weight_decay = 1e-4;    // decoupled, weights only
  int batch_size = 128;
  uint64_t seed = 0;
};

template <typename Scalar>
struct Gradients {
  std::vector<Mat<Scalar>> weights;
  std::vector<Vec<Scalar>> bias;
};

// Kaiming-uniform fan-in init (bound sqrt(6/fan_in)), zero biases, ReLU on
// hidden layers and Identity on the output layer. Fill order is fixed
// (layer by layer, weight rows first) so a seed pins every byte.
template <typename Scalar>
Network<Scalar> init_network(const std::vector<Index>& dims, uint64_t seed) {
  if (dims.size() < 2) throw ShapeError("network needs at least input and output dims");
  for (Index d : dims) {
    if (d < 1) throw ShapeError("all layer dims must be >= 1");
  }
  Rng rng(seed);
  Network<Scalar> net;
  net.input_dim = dims.front();
  for (size_t i = 1; i < dims.size(); ++i) {
    LinearLayer<Scalar> layer;
    const Index fan_in = dims[i - 1];
    const Index fan_out = dims[i];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    layer.weights.resize(fan_out, fan_in);
    for (Index r = 0; r < fan_out; ++r) {
      for (Index c = 0; c < fan_in; ++c) {
        layer.weights(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
      }
    }
    layer.bias = Vec<Scalar>::Zero(fan_out);
    layer.activation = (i + 1 < dims.size()) ? Activation::ReLU : Activation::Identity;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

// Mean softmax cross-entropy over the batch, computed row-wise with the
// usual max-shift for stability.
template <typename Scalar>
double cross_entropy(const Mat<Scalar>& logits, const VecI& labels) {
  if (logits.rows() != labels.size()) {
    throw ShapeError("logits rows != label count");
  }
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    const Scalar zmax = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Index c = 0; c < logits.cols(); ++c) {
      sum += std::exp(static_cast<double>(logits(i, c) - zmax));
    }
    total += std::log(sum) + static_cast<double>(zmax) -
             static_cast<double>(logits(i, labels[i]));
  }
  return total / static_cast<double>(logits.rows());
}

// Loss plus analytic gradients of the mean cross-entropy w.r.t. every weight
// and bias. The decoupled weight decay is applied at update time and is not
// part of this loss.
template <typename Scalar>
std::pair<double, Gradients<Scalar>> loss_and_gradients(const Network<Scalar>& net,
                                                        const Mat<Scalar>& batch,
                                                        const VecI& labels) {
  const auto activations = forward_all(net, batch);
  const Mat<Scalar>& logits = activations.back();
  const double loss = cross_entropy(logits, labels);
  const Index B = batch.rows();

  // dL/dlogits = (softmax - onehot) / B
  Mat<Scalar> grad(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const Scalar zmax = logits.row(i).maxCoeff();
    Vec<Scalar> e = (logits.row(i).transpose().array() - zmax).exp();
    e /= e.sum();
    grad.row(i) = e.transpose();
    grad(i, labels[i]) -= Scalar(1);
  }
  grad /= static_cast<Scalar>(B);

  Gradients<Scalar> g;
  g.weights.resize(net.layers.size());
  g.bias.resize(net.layers.size());
  for (Index l = net.depth() - 1; l >= 0; --l) {
    const auto& layer = net.layers[l];
    if (layer.activation == Activation::ReLU) {
      // post-activation > 0 iff pre-activation > 0; subgradient 0 at the kink
      grad = grad.cwiseProduct(
          (activations[l].array() > Scalar(0)).template cast<Scalar>().matrix());
    }
    const Mat<Scalar>& input = (l == 0) ? batch : activations[l - 1];
    g.weights[l] = grad.transpose() * input;
    g.bias[l] = grad.colwise().sum().transpose();
    if (l > 0) {
      grad = grad * layer.weights;
    }
  }
  return {loss, std::move(g)};
}

// Adam with decoupled weight decay (applied to weights only).
template <typename Scalar>
class AdamW {
 public:
  AdamW(const Network<Scalar>& net, double weight_decay)
      : weight_decay_(weight_decay) {
    for (const auto& l : net.layers) {
      mw_.push_back(Mat<Scalar>::Zero(l.weights.rows(), l.weights.cols()));
      vw_.push_back(Mat<Scalar>::Zero(l.weights.rows(), l.weights.cols()));
      mb_.push_back(Vec<Scalar>::Zero(l.bias.size()));
      vb_.push_back(Vec<Scalar>::Zero(l.bias.size()));
    }
  }

  void step(Network<Scalar>& net, const Gradients<Scalar>& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    const Scalar b1 = static_cast<Scalar>(beta1_);
    const Scalar b2 = static_cast<Scalar>(beta2_);
    const Scalar inv_c1 = static_cast<Scalar>(1.0 / c1);
    const Scalar inv_c2 = static_cast<Scalar>(1.0 / c2);
    const Scalar eps = static_cast<Scalar>(eps_);
    const Scalar slr = static_cast<Scalar>(lr);
    const Scalar decay = static_cast<Scalar>(lr * weight_decay_);
    for (size_t l = 0; l < net.layers.size(); ++l) {
      auto& W = net.layers[l].weights;
      auto& b = net.layers[l].bias;
      mw_[l] = b1 * mw_[l] + (Scalar(1) - b1) * g.weights[l];
      vw_[l] = b2 * vw_[l] + (Scalar(1) - b2) * g.weights[l].cwiseProduct(g.weights[l]);
      mb_[l] = b1 * mb_[l] + (Scalar(1) - b1) * g.bias[l];
      vb_[l] = b2 * vb_[l] + (Scalar(1) - b2) * g.bias[l].cwiseProduct(g.bias[l]);
      W.array() -= slr * (mw_[l].array() * inv_c1) /
                   ((vw_[l].array() * inv_c2).sqrt() + eps);
      W.array() -= decay * W.array();
      b.array() -= slr * (mb_[l].array() * inv_c1) /
                   ((vb_[l].array() * inv_c2).sqrt() + eps);
    }
  }

 private:
  std::vector<Mat<Scalar>> mw_, vw_;
  std::vector<Vec<Scalar>> mb_, vb_;
  double weight_decay_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
};

// Deterministic minibatch trainer: fixed init, fixed per-epoch shuffling,
// exponential LR decay. `dims` lists every width including input and output.
Networkf train(const std::vector<Index>& dims, const Dataset& data, const TrainConfig& cfg);

// Fraction of misclassified samples under argmax of the logits.
double evaluate(const Networkf& net, const Dataset& data);

}  // namespace miprune
