#include "miprune/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "miprune/io_util.hpp"
#include "miprune/rng.hpp"

namespace miprune {

std::string method_name(Method m) {
  switch (m) {
    case Method::MI: return "mi";
    case Method::Magnitude: return "magnitude";
    case Method::Random: return "random";
    case Method::Correlation: return "correlation";
    case Method::WeightSimilarity: return "weight-similarity";
  }
  throw InvalidInput("unknown method");
}

Method parse_method(const std::string& name) {
  if (name == "mi") return Method::MI;
  if (name == "magnitude") return Method::Magnitude;
  if (name == "random") return Method::Random;
  if (name == "correlation") return Method::Correlation;
  if (name == "weight-similarity") return Method::WeightSimilarity;
  throw InvalidInput("unknown pruning method '" + name + "'");
}

std::vector<double> schedule(double max_rate, int num_hidden) {
  if (max_rate < 0.0 || max_rate > 1.0) {
    throw InvalidInput("max_rate must be in [0,1], got " + format_double(max_rate));
  }
  if (num_hidden < 1) throw InvalidInput("schedule needs at least one hidden layer");
  std::vector<double> rates(static_cast<size_t>(num_hidden));
  for (int h = 1; h <= num_hidden; ++h) {
    rates[static_cast<size_t>(h - 1)] = max_rate * h / num_hidden;
  }
  return rates;
}

Index removal_count(double rate, Index width) {
  if (rate < 0.0 || rate > 1.0) {
    throw InvalidInput("pruning rate must be in [0,1], got " + format_double(rate));
  }
  const Index k = static_cast<Index>(std::floor(rate * static_cast<double>(width) + 1e-9));
  return std::min(k, width);
}

namespace {

VecD mi_layer_score(const MIMatrix& m, const std::vector<uint8_t>& keep_inputs) {
  if (static_cast<Index>(keep_inputs.size()) != m.values.rows()) {
    throw ShapeError("keep mask length " + std::to_string(keep_inputs.size()) +
                     " != MI matrix rows " + std::to_string(m.values.rows()) +
                     " at layer " + std::to_string(m.layer_index));
  }
  VecD scores = VecD::Zero(m.values.cols());
  for (Index n = 0; n < m.values.rows(); ++n) {
    if (!keep_inputs[static_cast<size_t>(n)]) continue;  // pruned row contributes 0
    scores += m.values.row(n).transpose();
  }
  return scores;
}

std::vector<size_t> order_by_score(const VecD& scores) {
  std::vector<size_t> idx(static_cast<size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return scores[static_cast<Index>(a)] < scores[static_cast<Index>(b)];
  });  // stable: equal scores keep index order, so lower indices go first
  return idx;
}

std::vector<Index> hidden_widths(const Networkf& net) {
  std::vector<Index> w;
  for (Index l = 0; l + 1 < net.depth(); ++l) {
    w.push_back(net.layers[static_cast<size_t>(l)].out_dim());
  }
  return w;
}

}  // namespace

LayerScores mi_scores(const std::vector<MIMatrix>& mi,
                      const std::vector<std::vector<uint8_t>>& keep) {
  if (keep.size() < mi.size()) {
    throw ShapeError("need one keep mask per MI matrix input layer");
  }
  LayerScores scores;
  scores.reserve(mi.size());
  for (size_t i = 0; i < mi.size(); ++i) {
    scores.push_back(mi_layer_score(mi[i], keep[i]));
  }
  return scores;
}

LayerScores magnitude_scores(const Networkf& net, MagnitudeMode mode) {
  net.validate();
  LayerScores scores;
  for (Index l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layers[static_cast<size_t>(l)];
    VecD s = VecD::Zero(layer.out_dim());
    if (mode == MagnitudeMode::Incoming || mode == MagnitudeMode::Both) {
      s += layer.weights.cast<double>().rowwise().norm();
    }
    if ((mode == MagnitudeMode::Outgoing || mode == MagnitudeMode::Both) &&
        l + 1 < net.depth()) {
      s += net.layers[static_cast<size_t>(l + 1)].weights.cast<double>()
               .colwise().norm().transpose();
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

LayerScores score_mi(const std::vector<MIMatrix>& mi,
                     const std::vector<std::vector<uint8_t>>& keep) {
  LayerScores all = mi_scores(mi, keep);
  if (!all.empty()) all.pop_back();  // output layer is never pruned
  return all;
}

LayerScores score_magnitude(const Networkf& net, MagnitudeMode mode) {
  LayerScores all = magnitude_scores(net, mode);
  all.pop_back();
  return all;
}

LayerScores score_random(const Networkf& net, uint64_t seed) {
  net.validate();
  Rng rng(seed);
  LayerScores scores;
  for (Index w : hidden_widths(net)) {
    VecD s(w);
    for (Index i = 0; i < w; ++i) s[i] = rng.uniform01();
    scores.push_back(std::move(s));
  }
  return scores;
}

LayerScores score_correlation(const ActivationTrace& trace) {
  LayerScores scores;
  const Index L = trace.depth();
  for (Index h = 1; h < L; ++h) {
    const TraceLayer& layer = trace.layers[static_cast<size_t>(h)];
    const Index W = layer.dim();
    const Index S = layer.values.rows();
    VecD s(W);
    if (W == 1) {
      s[0] = layer.constant[0] ? 0.0 : 1.0;
      scores.push_back(std::move(s));
      continue;
    }
    // z-score live columns; the correlation matrix is then Z^T Z.
    MatD z = MatD::Zero(S, W);
    std::vector<bool> live(static_cast<size_t>(W), false);
    for (Index c = 0; c < W; ++c) {
      if (layer.constant[static_cast<size_t>(c)]) continue;
      VecD col = layer.values.col(c).cast<double>();
      col.array() -= col.mean();
      const double norm = col.norm();
      if (norm == 0.0) continue;
      live[static_cast<size_t>(c)] = true;
      z.col(c) = col / norm;
    }
    const MatD corr = z.transpose() * z;
    for (Index m = 0; m < W; ++m) {
      if (!live[static_cast<size_t>(m)]) {
        s[m] = 0.0;  // constant: redundant with any constant
        continue;
      }
      double max_abs = 0.0;
      bool any = false;
      for (Index k = 0; k < W; ++k) {
        if (k == m || !live[static_cast<size_t>(k)]) continue;
        any = true;
        max_abs = std::max(max_abs, std::abs(corr(m, k)));
      }
      s[m] = any ? 1.0 - std::min(max_abs, 1.0) : 1.0;
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

LayerScores score_weight_similarity(const Networkf& net) {
  net.validate();
  LayerScores scores;
  for (Index l = 0; l + 1 < net.depth(); ++l) {
    const auto& layer = net.layers[static_cast<size_t>(l)];
    const auto& next = net.layers[static_cast<size_t>(l + 1)];
    const Index M = layer.out_dim();
    VecD s(M);
    if (M == 1) {
      s[0] = std::numeric_limits<double>::max();
      scores.push_back(std::move(s));
      continue;
    }
    // incoming rows with bias appended
    MatD w(M, layer.in_dim() + 1);
    w.leftCols(layer.in_dim()) = layer.weights.cast<double>();
    w.col(layer.in_dim()) = layer.bias.cast<double>();
    const VecD out_sq = next.weights.cast<double>().colwise().squaredNorm().transpose();
    for (Index m = 0; m < M; ++m) {
      double best = std::numeric_limits<double>::max();
      for (Index k = 0; k < M; ++k) {
        if (k == m) continue;
        const double d = (w.row(m) - w.row(k)).squaredNorm();
        best = std::min(best, out_sq[k] * d);
      }
      s[m] = best;
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

bool PrunePlan::empty() const {
  for (const auto& r : removals) {
    if (!r.empty()) return false;
  }
  return true;
}

PrunePlan make_plan(const LayerScores& hidden_scores, const std::vector<double>& rates) {
  if (hidden_scores.size() != rates.size()) {
    throw ShapeError("have " + std::to_string(hidden_scores.size()) +
                     " score vectors but " + std::to_string(rates.size()) + " rates");
  }
  PrunePlan plan;
  plan.rates = rates;
  plan.removals.resize(hidden_scores.size());
  for (size_t h = 0; h < hidden_scores.size(); ++h) {
    const VecD& s = hidden_scores[h];
    if (!s.allFinite()) {
      throw InvalidInput("non-finite score in hidden layer " + std::to_string(h + 1));
    }
    const Index width = s.size();
    const Index k = removal_count(rates[h], width);
    if (k >= width && k > 0) {
      throw PlanError("rate " + format_double(rates[h]) + " would empty hidden layer " +
                      std::to_string(h + 1));
    }
    const auto order = order_by_score(s);
    auto& removed = plan.removals[h];
    removed.assign(order.begin(), order.begin() + k);
    std::sort(removed.begin(), removed.end());
  }
  return plan;
}

Networkf apply_plan(const Networkf& net, const PrunePlan& plan) {
  net.validate();
  const size_t num_hidden = static_cast<size_t>(net.depth()) - 1;
  if (plan.removals.size() != num_hidden) {
    throw PlanError("plan covers " + std::to_string(plan.removals.size()) +
                    " layers but network has " + std::to_string(num_hidden) +
                    " hidden layers; input and output layers cannot be pruned");
  }
  // keep[l]: surviving neuron indices of layer l's output
  std::vector<std::vector<Index>> keep(net.layers.size());
  for (size_t l = 0; l < net.layers.size(); ++l) {
    const Index width = net.layers[l].out_dim();
    std::vector<uint8_t> removed(static_cast<size_t>(width), 0);
    if (l < num_hidden) {
      for (Index idx : plan.removals[l]) {
        if (idx < 0 || idx >= width) {
          throw PlanError("removal index " + std::to_string(idx) +
                          " out of range for hidden layer " + std::to_string(l + 1) +
                          " of width " + std::to_string(width));
        }
        if (removed[static_cast<size_t>(idx)]) {
          throw PlanError("neuron " + std::to_string(idx) +
                          " removed twice in hidden layer " + std::to_string(l + 1));
        }
        removed[static_cast<size_t>(idx)] = 1;
      }
      if (plan.removals[l].size() >= static_cast<size_t>(width)) {
        throw PlanError("plan empties hidden layer " + std::to_string(l + 1));
      }
    }
    for (Index i = 0; i < width; ++i) {
      if (!removed[static_cast<size_t>(i)]) keep[l].push_back(i);
    }
  }

  Networkf out;
  out.input_dim = net.input_dim;
  out.layers.resize(net.layers.size());
  for (size_t l = 0; l < net.layers.size(); ++l) {
    const auto& src = net.layers[l];
    auto& dst = out.layers[l];
    dst.activation = src.activation;
    const std::vector<Index>& rows = keep[l];
    const Index out_dim = static_cast<Index>(rows.size());
    if (l == 0) {
      dst.weights.resize(out_dim, src.in_dim());
      for (Index r = 0; r < out_dim; ++r) dst.weights.row(r) = src.weights.row(rows[r]);
    } else {
      const std::vector<Index>& cols = keep[l - 1];
      dst.weights.resize(out_dim, static_cast<Index>(cols.size()));
      for (Index r = 0; r < out_dim; ++r) {
        for (size_t c = 0; c < cols.size(); ++c) {
          dst.weights(r, static_cast<Index>(c)) = src.weights(rows[r], cols[c]);
        }
      }
    }
    dst.bias.resize(out_dim);
    for (Index r = 0; r < out_dim; ++r) dst.bias[r] = src.bias[rows[r]];
  }
  out.validate();
  return out;
}

PruneResult prune(const Networkf& net, Method method, double max_rate,
                  const ActivationTrace* trace, const std::vector<MIMatrix>* mi,
                  uint64_t seed) {
  net.validate();
  if (max_rate < 0.0 || max_rate > 1.0) {
    throw InvalidInput("max_rate must be in [0,1], got " + format_double(max_rate));
  }
  const int num_hidden = static_cast<int>(net.depth()) - 1;
  PruneResult result;
  if (num_hidden == 0) {
    result.network = net;
    return result;
  }
  const std::vector<double> rates = schedule(max_rate, num_hidden);

  if (method == Method::MI) {
    if (mi == nullptr || static_cast<Index>(mi->size()) != net.depth()) {
      throw InvalidInput("MI pruning needs one MI matrix per layer");
    }
    const auto dims = net.dims();
    for (size_t i = 0; i < mi->size(); ++i) {
      if ((*mi)[i].values.rows() != dims[i] || (*mi)[i].values.cols() != dims[i + 1]) {
        throw ShapeError("MI matrix " + std::to_string(i + 1) + " is " +
                         std::to_string((*mi)[i].values.rows()) + "x" +
                         std::to_string((*mi)[i].values.cols()) +
                         " but the network expects " + std::to_string(dims[i]) + "x" +
                         std::to_string(dims[i + 1]) + "; stale cache?");
      }
    }
    // Phase 3 is sequential: layer h's scores see layer h-1's removals.
    PrunePlan plan;
    plan.rates = rates;
    plan.removals.resize(static_cast<size_t>(num_hidden));
    std::vector<uint8_t> keep(static_cast<size_t>(net.input_dim), 1);
    for (int h = 0; h < num_hidden; ++h) {
      const VecD s = mi_layer_score((*mi)[static_cast<size_t>(h)], keep);
      LayerScores one{s};
      PrunePlan sub = make_plan(one, {rates[static_cast<size_t>(h)]});
      plan.removals[static_cast<size_t>(h)] = sub.removals[0];
      result.scores.push_back(s);
      keep.assign(static_cast<size_t>(s.size()), 1);
      for (Index idx : plan.removals[static_cast<size_t>(h)]) {
        keep[static_cast<size_t>(idx)] = 0;
      }
    }
    result.plan = std::move(plan);
  } else {
    switch (method) {
      case Method::Magnitude:
        result.scores = score_magnitude(net);
        break;
      case Method::Random:
        result.scores = score_random(net, seed);
        break;
      case Method::Correlation:
        if (trace == nullptr) throw InvalidInput("correlation pruning needs a trace");
        if (trace->depth() != net.depth()) {
          throw ShapeError("trace depth " + std::to_string(trace->depth()) +
                           " != network depth " + std::to_string(net.depth()));
        }
        result.scores = score_correlation(*trace);
        break;
      case Method::WeightSimilarity:
        result.scores = score_weight_similarity(net);
        break;
      default:
        throw InvalidInput("unhandled method");
    }
    result.plan = make_plan(result.scores, rates);
  }
  result.network = apply_plan(net, result.plan);
  return result;
}

void write_plan(const PrunePlan& plan, std::ostream& os) {
  for (size_t h = 0; h < plan.removals.size(); ++h) {
    os << "layer " << (h + 1) << " remove ";
    if (plan.removals[h].empty()) {
      os << "-";
    } else {
      for (size_t i = 0; i < plan.removals[h].size(); ++i) {
        if (i > 0) os << ",";
        os << plan.removals[h][i];
      }
    }
    os << " rate " << format_double(plan.rates[h]) << "\n";
  }
}

void write_scores_csv(Method method, const LayerScores& scores, std::ostream& os) {
  os << "method,layer,neuron,score\n";
  for (size_t h = 0; h < scores.size(); ++h) {
    for (Index m = 0; m < scores[h].size(); ++m) {
      os << method_name(method) << "," << (h + 1) << "," << m << ","
         << format_double(scores[h][m]) << "\n";
    }
  }
}

}  // namespace miprune
