#include "miprune/train.hpp"

#include <algorithm>

namespace miprune {

Networkf train(const std::vector<Index>& dims, const Dataset& data, const TrainConfig& cfg) {
  data.validate();
  if (data.size() == 0) throw InvalidInput("training dataset is empty");
  if (dims.size() < 2) throw ShapeError("network needs at least input and output dims");
  if (data.dim() != dims.front()) {
    throw ShapeError("dataset dim " + std::to_string(data.dim()) +
                     " != network input dim " + std::to_string(dims.front()));
  }
  if (data.labels.maxCoeff() >= dims.back()) {
    throw InvalidInput("label " + std::to_string(data.labels.maxCoeff()) +
                       " out of range for output dim " + std::to_string(dims.back()));
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.initial_lr <= 0.0 ||
      cfg.lr_decay_gamma <= 0.0 || cfg.lr_decay_gamma > 1.0 || cfg.weight_decay < 0.0) {
    throw InvalidInput("invalid training config");
  }

  Networkf net = init_network<float>(dims, cfg.seed);
  AdamW<float> opt(net, cfg.weight_decay);
  // Separate stream for shuffling so init_network(dims, seed) alone
  // reproduces the epoch-0 model.
  Rng shuffle_rng(cfg.seed ^ 0x6a09e667f3bcc909ull);

  const Index n = data.size();
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));

  double lr = cfg.initial_lr;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index bs = std::min<Index>(cfg.batch_size, n - start);
      MatF batch(bs, data.dim());
      VecI labels(bs);
      for (Index i = 0; i < bs; ++i) {
        batch.row(i) = data.features.row(order[start + i]);
        labels[i] = data.labels[order[start + i]];
      }
      auto [loss, grads] = loss_and_gradients(net, batch, labels);
      if (!std::isfinite(loss)) {
        throw TrainError("training diverged at epoch " + std::to_string(epoch) +
                         ": non-finite loss");
      }
      opt.step(net, grads, lr);
    }
    lr *= cfg.lr_decay_gamma;
  }
  return net;
}

double evaluate(const Networkf& net, const Dataset& data) {
  if (data.size() == 0) throw InvalidInput("cannot evaluate on an empty dataset");
  if (data.dim() != net.input_dim) {
    throw ShapeError("dataset dim " + std::to_string(data.dim()) +
                     " != network input dim " + std::to_string(net.input_dim));
  }
  const Index chunk = 2048;
  Index wrong = 0;
  for (Index start = 0; start < data.size(); start += chunk) {
    const Index bs = std::min(chunk, data.size() - start);
    const MatF logits = forward(net, MatF(data.features.middleRows(start, bs)));
    for (Index i = 0; i < bs; ++i) {
      Index best = 0;
      for (Index c = 1; c < logits.cols(); ++c) {
        if (logits(i, c) > logits(i, best)) best = c;  // ties keep lowest index
      }
      if (best != data.labels[start + i]) ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

}  // namespace miprune
