#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "miprune/probe.hpp"
#include "miprune/rng.hpp"

using namespace miprune;

namespace {

Networkf identity_net(Index dim) {
  Networkf net;
  net.input_dim = dim;
  LinearLayer<float> layer;
  layer.weights = MatF::Identity(dim, dim);
  layer.bias = VecF::Zero(dim);
  layer.activation = Activation::Identity;
  net.layers.push_back(layer);
  return net;
}

Networkf random_net(Rng& rng, const std::vector<Index>& dims) {
  Networkf net;
  net.input_dim = dims.front();
  for (size_t i = 1; i < dims.size(); ++i) {
    LinearLayer<float> layer;
    layer.weights.resize(dims[i], dims[i - 1]);
    layer.bias.resize(dims[i]);
    for (Index r = 0; r < layer.weights.rows(); ++r) {
      for (Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = static_cast<float>(rng.uniform(-0.5, 0.5));
      }
    }
    for (Index r = 0; r < layer.bias.size(); ++r) {
      layer.bias[r] = static_cast<float>(rng.uniform(-0.2, 0.2));
    }
    layer.activation = (i + 1 < dims.size()) ? Activation::ReLU : Activation::Identity;
    net.layers.push_back(layer);
  }
  return net;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("sample_intervention: seeded determinism and minimum size") {
  ProbeConfig cfg;
  cfg.num_samples = 16;
  cfg.seed = 123;
  const MatF a = sample_intervention(5, cfg);
  const MatF b = sample_intervention(5, cfg);
  CHECK((a.array() == b.array()).all());

  cfg.num_samples = 2;
  const MatF tiny = sample_intervention(3, cfg);
  CHECK(tiny.rows() == 2);
  CHECK(tiny.cols() == 3);

  cfg.num_samples = 1;
  CHECK_THROWS_AS(sample_intervention(3, cfg), InvalidInput);
}

TEST_CASE("sample_intervention: standard-normal moments at S=5000") {
  ProbeConfig cfg;
  cfg.num_samples = 5000;
  cfg.seed = 2024;
  const MatF x = sample_intervention(100, cfg);
  for (Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).cast<double>().mean();
    const double var =
        (x.col(c).cast<double>().array() - mean).square().sum() / (x.rows() - 1.0);
    CHECK(std::abs(mean) <= 0.05);
    CHECK(std::abs(std::sqrt(var) - 1.0) <= 0.05);
  }
}

TEST_CASE("record_trace: identity net propagates the normalized intervention") {
  auto net = identity_net(3);
  ProbeConfig cfg;
  cfg.num_samples = 64;
  cfg.seed = 7;
  const ActivationTrace trace = record_trace(net, cfg);
  REQUIRE(trace.layers.size() == 2);
  CHECK((trace.layers[0].values.array() == trace.layers[1].values.array()).all());
}

TEST_CASE("record_trace: dead neuron becomes a flagged 0.5 column") {
  Networkf net;
  net.input_dim = 2;
  LinearLayer<float> layer;
  layer.weights.resize(2, 2);
  layer.weights << 1.0f, 0.0f,
                   0.0f, 0.0f;  // neuron 1: zero weights, zero bias
  layer.bias = VecF::Zero(2);
  layer.activation = Activation::ReLU;
  net.layers.push_back(layer);

  ProbeConfig cfg;
  cfg.num_samples = 32;
  cfg.seed = 3;
  cfg.granularity = NormGranularity::PerNeuron;
  const ActivationTrace trace = record_trace(net, cfg);
  const TraceLayer& hidden = trace.layers[1];
  CHECK(hidden.constant[1] == 1);
  CHECK(hidden.constant[0] == 0);
  CHECK((hidden.values.col(1).array() == 0.5f).all());

  // per-layer granularity still flags the dead column
  cfg.granularity = NormGranularity::PerLayer;
  const ActivationTrace layer_trace = record_trace(net, cfg);
  CHECK(layer_trace.layers[1].constant[1] == 1);
}

TEST_CASE("record_trace: stored ranges invert the normalization") {
  Rng rng(15);
  auto net = random_net(rng, {4, 6, 3});
  ProbeConfig cfg;
  cfg.num_samples = 128;
  cfg.seed = 4;
  const ActivationTrace trace = record_trace(net, cfg);
  const MatF x0 = sample_intervention(net.input_dim, cfg);
  const auto raw = forward_all(net, x0);
  for (size_t l = 1; l < trace.layers.size(); ++l) {
    const TraceLayer& layer = trace.layers[l];
    const MatF& r = raw[l - 1];
    for (Index c = 0; c < layer.dim(); ++c) {
      if (layer.constant[static_cast<size_t>(c)]) continue;
      for (Index s = 0; s < r.rows(); ++s) {
        const double rebuilt =
            static_cast<double>(layer.lo[c]) +
            static_cast<double>(layer.values(s, c)) *
                (static_cast<double>(layer.hi[c]) - static_cast<double>(layer.lo[c]));
        CHECK(std::abs(rebuilt - static_cast<double>(r(s, c))) <= 1e-6);
      }
    }
  }
}

TEST_CASE("record_trace: per-neuron columns hit both endpoints, all in [0,1]") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = random_net(rng, {3, 5, 4});
    ProbeConfig cfg;
    cfg.num_samples = 50;
    cfg.seed = 1000 + static_cast<uint64_t>(trial);
    cfg.granularity = NormGranularity::PerNeuron;
    const ActivationTrace trace = record_trace(net, cfg);
    for (const auto& layer : trace.layers) {
      CHECK(layer.values.minCoeff() >= 0.0f);
      CHECK(layer.values.maxCoeff() <= 1.0f);
      for (Index c = 0; c < layer.dim(); ++c) {
        if (layer.constant[static_cast<size_t>(c)]) continue;
        CHECK(layer.values.col(c).minCoeff() == 0.0f);
        CHECK(layer.values.col(c).maxCoeff() == 1.0f);
      }
    }
  }
}

TEST_CASE("record_trace: per-layer granularity shares one range per layer") {
  Rng rng(8);
  auto net = random_net(rng, {3, 4, 2});
  ProbeConfig cfg;
  cfg.num_samples = 64;
  cfg.seed = 12;
  cfg.granularity = NormGranularity::PerLayer;
  const ActivationTrace trace = record_trace(net, cfg);
  for (const auto& layer : trace.layers) {
    CHECK((layer.lo.array() == layer.lo[0]).all());
    CHECK((layer.hi.array() == layer.hi[0]).all());
    CHECK(layer.values.minCoeff() >= 0.0f);
    CHECK(layer.values.maxCoeff() <= 1.0f);
  }
}

TEST_CASE("record_trace: non-finite activation names layer and neuron") {
  Networkf net = identity_net(2);
  net.layers[0].weights(1, 1) = std::numeric_limits<float>::infinity();
  ProbeConfig cfg;
  cfg.num_samples = 8;
  cfg.seed = 2;
  CHECK_THROWS_WITH_AS(record_trace(net, cfg), doctest::Contains("layer 1"), ProbeError);
}

TEST_CASE("trace io: round trip and determinism of bytes") {
  Rng rng(77);
  auto net = random_net(rng, {4, 5, 3});
  ProbeConfig cfg;
  cfg.num_samples = 40;
  cfg.seed = 55;
  const ActivationTrace trace = record_trace(net, cfg);

  const auto p1 = temp_file("miprune_trace_a.bin");
  const auto p2 = temp_file("miprune_trace_b.bin");
  save_trace(trace, p1);
  save_trace(record_trace(net, cfg), p2);
  CHECK(file_bytes(p1) == file_bytes(p2));

  const ActivationTrace loaded = load_trace(p1);
  REQUIRE(loaded.layers.size() == trace.layers.size());
  CHECK(loaded.num_samples == trace.num_samples);
  for (size_t l = 0; l < trace.layers.size(); ++l) {
    CHECK((loaded.layers[l].values.array() == trace.layers[l].values.array()).all());
    CHECK((loaded.layers[l].lo.array() == trace.layers[l].lo.array()).all());
    CHECK((loaded.layers[l].hi.array() == trace.layers[l].hi.array()).all());
    CHECK(loaded.layers[l].constant == trace.layers[l].constant);
  }
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("trace io: format errors") {
  const auto path = temp_file("miprune_trace_bad.bin");
  SUBCASE("bad magic") {
    std::ofstream os(path, std::ios::binary);
    os << "XXXXgarbage";
    os.close();
    CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("magic"), FormatError);
  }
  SUBCASE("truncated") {
    Rng rng(6);
    auto net = random_net(rng, {3, 3, 2});
    ProbeConfig cfg;
    cfg.num_samples = 16;
    save_trace(record_trace(net, cfg), path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 7);
    CHECK_THROWS_WITH_AS(load_trace(path), doctest::Contains("truncated"), FormatError);
  }
  std::filesystem::remove(path);
}
