#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "miprune/network.hpp"
#include "miprune/types.hpp"

namespace miprune {

// Range granularity for the [0,1] rescaling of cached activations. PerLayer
// shares one (min, max) across a layer, so low-amplitude neurons occupy few
// histogram bins and score low MI; PerNeuron stretches every column to [0,1],
// which discards amplitude. PerLayer is the default: it makes MI scores track
// observed activation strength, which is what the pruning ranking needs.
enum class NormGranularity : uint8_t { PerNeuron = 0, PerLayer = 1 };

struct ProbeConfig {
  int num_samples = 5000;  // S
  uint64_t seed = 0;
  NormGranularity granularity = NormGranularity::PerLayer;
};

// One cached layer: normalized activations plus the ranges that normalized
// them. Constant columns carry their own flag; under per-neuron granularity
// they are stored as the center value 0.5.
struct TraceLayer {
  MatF values;                    // S x dim, entries in [0,1]
  VecF lo, hi;                    // per-neuron normalization ranges
  std::vector<uint8_t> constant;  // per-neuron: raw column had zero range

  Index dim() const { return values.cols(); }
};

// Cached, clamped, normalized activations x_0..x_L for S probe samples.
struct ActivationTrace {
  std::vector<TraceLayer> layers;  // size L+1; layers[0] is the intervention
  int num_samples = 0;

  Index depth() const { return static_cast<Index>(layers.size()) - 1; }
};

// S x input_dim matrix of i.i.d. standard-normal draws; this matrix is the
// input intervention and stands in for any real data.
MatF sample_intervention(Index input_dim, const ProbeConfig& cfg);

// Samples the intervention, propagates it, and caches every layer's output
// rescaled to [0,1] by its observed range.
ActivationTrace record_trace(const Networkf& net, const ProbeConfig& cfg);

// Trace container, magic "MIPT": u32 version=1, u32 S, u32 L, then per layer
// i in [0,L]: u32 dim, float32 (lo,hi) per neuron, values S x dim float32
// row-major.
void save_trace(const ActivationTrace& trace, const std::filesystem::path& path);
ActivationTrace load_trace(const std::filesystem::path& path);

}  // namespace miprune
