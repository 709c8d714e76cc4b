#include "miprune/probe.hpp"

#include <algorithm>
#include <cmath>

#include "miprune/errors.hpp"
#include "miprune/io_util.hpp"
#include "miprune/rng.hpp"

namespace miprune {

namespace {
constexpr std::array<char, 4> kMagic = {'M', 'I', 'P', 'T'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxDim = 1u << 24;

void check_probe_config(const ProbeConfig& cfg) {
  if (cfg.num_samples < 2) {
    throw InvalidInput("probe needs at least 2 samples, got " +
                       std::to_string(cfg.num_samples));
  }
}

// Rescale one raw layer output into a TraceLayer using the configured range
// granularity. Values are clamped into [lo, hi] before scaling so reused
// ranges stay in [0,1].
TraceLayer normalize_layer(const MatF& raw, NormGranularity granularity) {
  TraceLayer out;
  const Index dim = raw.cols();
  out.lo.resize(dim);
  out.hi.resize(dim);
  out.constant.resize(static_cast<size_t>(dim));
  const VecF col_min = raw.colwise().minCoeff().transpose();
  const VecF col_max = raw.colwise().maxCoeff().transpose();
  if (granularity == NormGranularity::PerLayer) {
    out.lo.setConstant(col_min.minCoeff());
    out.hi.setConstant(col_max.maxCoeff());
  } else {
    out.lo = col_min;
    out.hi = col_max;
  }
  out.values.resize(raw.rows(), dim);
  for (Index c = 0; c < dim; ++c) {
    out.constant[static_cast<size_t>(c)] = (col_min[c] == col_max[c]) ? 1 : 0;
    const double lo = out.lo[c];
    const double hi = out.hi[c];
    if (hi == lo) {
      out.values.col(c).setConstant(0.5f);  // center bin for dead columns
      continue;
    }
    const double scale = 1.0 / (hi - lo);
    for (Index r = 0; r < raw.rows(); ++r) {
      const double clamped = std::clamp(static_cast<double>(raw(r, c)), lo, hi);
      out.values(r, c) = static_cast<float>((clamped - lo) * scale);
    }
  }
  return out;
}
}  // namespace

MatF sample_intervention(Index input_dim, const ProbeConfig& cfg) {
  if (input_dim < 1) throw InvalidInput("input_dim must be >= 1");
  check_probe_config(cfg);
  Rng rng(cfg.seed);
  MatF x(cfg.num_samples, input_dim);
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < x.cols(); ++c) {
      x(r, c) = static_cast<float>(rng.normal());
    }
  }
  return x;
}

ActivationTrace record_trace(const Networkf& net, const ProbeConfig& cfg) {
  net.validate();
  check_probe_config(cfg);
  const MatF x0 = sample_intervention(net.input_dim, cfg);
  const auto outputs = forward_all(net, x0);
  for (size_t i = 0; i < outputs.size(); ++i) {
    if (!outputs[i].allFinite()) {
      for (Index c = 0; c < outputs[i].cols(); ++c) {
        if (!outputs[i].col(c).allFinite()) {
          throw ProbeError("non-finite activation at layer " + std::to_string(i + 1) +
                           ", neuron " + std::to_string(c));
        }
      }
    }
  }
  ActivationTrace trace;
  trace.num_samples = cfg.num_samples;
  trace.layers.reserve(outputs.size() + 1);
  trace.layers.push_back(normalize_layer(x0, cfg.granularity));
  for (const auto& raw : outputs) {
    trace.layers.push_back(normalize_layer(raw, cfg.granularity));
  }
  return trace;
}

void save_trace(const ActivationTrace& trace, const std::filesystem::path& path) {
  if (trace.layers.empty()) throw InvalidInput("trace has no layers");
  auto os = open_output(path);
  write_magic(os, kMagic);
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(trace.num_samples));
  write_u32(os, static_cast<uint32_t>(trace.depth()));
  for (const auto& layer : trace.layers) {
    write_u32(os, static_cast<uint32_t>(layer.dim()));
    for (Index c = 0; c < layer.dim(); ++c) {
      write_f32(os, layer.lo[c]);
      write_f32(os, layer.hi[c]);
    }
    write_bytes(os, layer.values.data(), sizeof(float) * layer.values.size());
  }
  if (!os) throw FormatError("failed writing trace to " + path.string());
}

ActivationTrace load_trace(const std::filesystem::path& path) {
  auto is = open_input(path);
  const std::string what = "trace " + path.string();
  expect_magic(is, kMagic, what);
  const uint32_t version = read_u32(is, what + " version");
  if (version != kVersion) {
    throw FormatError("unsupported trace version " + std::to_string(version) + " in " +
                      path.string());
  }
  const uint32_t samples = read_u32(is, what + " sample count");
  const uint32_t depth = read_u32(is, what + " layer count");
  if (samples < 2 || depth < 1 || samples > kMaxDim || depth > kMaxDim) {
    throw FormatError("inconsistent dimensions in " + path.string());
  }
  ActivationTrace trace;
  trace.num_samples = static_cast<int>(samples);
  for (uint32_t l = 0; l <= depth; ++l) {
    const uint32_t dim = read_u32(is, what + " layer dim");
    if (dim < 1 || dim > kMaxDim) {
      throw FormatError("inconsistent dimensions in " + path.string());
    }
    TraceLayer layer;
    layer.lo.resize(dim);
    layer.hi.resize(dim);
    for (uint32_t c = 0; c < dim; ++c) {
      layer.lo[c] = read_f32(is, what + " range lo");
      layer.hi[c] = read_f32(is, what + " range hi");
    }
    layer.values.resize(samples, dim);
    read_bytes(is, layer.values.data(), sizeof(float) * layer.values.size(),
               what + " activations");
    layer.constant.resize(dim);
    for (Index c = 0; c < layer.values.cols(); ++c) {
      const float mn = layer.values.col(c).minCoeff();
      const float mx = layer.values.col(c).maxCoeff();
      layer.constant[static_cast<size_t>(c)] = (mn == mx) ? 1 : 0;
    }
    trace.layers.push_back(std::move(layer));
  }
  return trace;
}

}  // namespace miprune
