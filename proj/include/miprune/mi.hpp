#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "miprune/errors.hpp"
#include "miprune/probe.hpp"
#include "miprune/types.hpp"

namespace miprune {

struct HistogramConfig {
  int bins = 32;  // B
};

// 2-D joint histogram over [0,1]^2 with B x B uniform bins. Rows index the
// first variable, columns the second.
struct JointHistogram {
  Mat<int64_t> counts;
  int64_t total = 0;  // sum of counts == sample count
};

// Bin rule: min(floor(v*B), B-1), so v == 1.0 lands in the last bin.
// Values within 1e-9 of [0,1] are accepted and clamped.
inline int bin_index(double v, int bins, const char* axis) {
  int idx = static_cast<int>(std::floor(v * bins));
  if (idx < 0) {
    if (v < -1e-9) {
      throw RangeError(std::string(axis) + " value " + std::to_string(v) +
                       " outside [0,1]");
    }
    idx = 0;
  } else if (idx >= bins) {
    if (v > 1.0 + 1e-9) {
      throw RangeError(std::string(axis) + " value " + std::to_string(v) +
                       " outside [0,1]");
    }
    idx = bins - 1;
  }
  return idx;
}

template <typename DerivedX, typename DerivedY>
JointHistogram joint_histogram(const Eigen::MatrixBase<DerivedX>& x,
                               const Eigen::MatrixBase<DerivedY>& y,
                               const HistogramConfig& cfg) {
  if (cfg.bins < 2) throw InvalidInput("histogram needs at least 2 bins");
  if (x.size() != y.size()) {
    throw ShapeError("joint histogram inputs differ in length: " +
                     std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() == 0) throw InvalidInput("joint histogram needs samples");
  JointHistogram h;
  h.counts = Mat<int64_t>::Zero(cfg.bins, cfg.bins);
  h.total = x.size();
  for (Index i = 0; i < x.size(); ++i) {
    const int bx = bin_index(static_cast<double>(x(i)), cfg.bins, "x");
    const int by = bin_index(static_cast<double>(y(i)), cfg.bins, "y");
    ++h.counts(bx, by);
  }
  return h;
}

// Plug-in mutual information in nats: sum over occupied cells of
// p(u,v) * ln(p(u,v) / (p(u) p(v))) with p = count / total; empty cells
// contribute 0 and the rounding residue is clamped at 0.
double mutual_information(const JointHistogram& h);

// Per-connection MI between consecutive layers' normalized activations.
struct MIMatrix {
  MatD values;          // N x M: inputs of layer `layer_index` by its outputs
  int layer_index = 0;  // i in [1, L]; pairs x_{i-1} with x_i
};

// MI for every (input neuron, output neuron) pair of layer i. Columns the
// trace flags constant score 0 against every partner.
MIMatrix layer_mi(const ActivationTrace& trace, int layer_index,
                  const HistogramConfig& cfg);

std::vector<MIMatrix> all_layer_mi(const ActivationTrace& trace,
                                   const HistogramConfig& cfg);

// MI cache, magic "MIPM": u32 version=1, u32 L, u32 B, u32 S, then per layer
// u32 N, u32 M, float64 values row-major.
struct MICache {
  std::vector<MIMatrix> layers;
  int bins = 0;
  int num_samples = 0;
};

void save_mi(const std::vector<MIMatrix>& mi, int bins, int num_samples,
             const std::filesystem::path& path);
MICache load_mi(const std::filesystem::path& path);

}  // namespace miprune
