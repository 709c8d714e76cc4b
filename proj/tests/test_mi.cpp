#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "miprune/mi.hpp"
#include "miprune/probe.hpp"
#include "miprune/rng.hpp"

using namespace miprune;

namespace {

// ---- independent oracles (brute force, no shared code with the library) ----

int oracle_bin(double v, int bins) {
  for (int b = 0; b < bins - 1; ++b) {
    if (v < static_cast<double>(b + 1) / static_cast<double>(bins)) return b;
  }
  return bins - 1;
}

std::vector<std::vector<long>> oracle_counts(const std::vector<double>& x,
                                             const std::vector<double>& y, int bins) {
  std::vector<std::vector<long>> c(static_cast<size_t>(bins),
                                   std::vector<long>(static_cast<size_t>(bins), 0));
  for (size_t i = 0; i < x.size(); ++i) {
    c[static_cast<size_t>(oracle_bin(x[i], bins))]
     [static_cast<size_t>(oracle_bin(y[i], bins))]++;
  }
  return c;
}

double oracle_mi_from_counts(const std::vector<std::vector<long>>& c, long total) {
  const size_t B = c.size();
  std::vector<double> px(B, 0.0), py(B, 0.0);
  for (size_t u = 0; u < B; ++u) {
    for (size_t v = 0; v < B; ++v) {
      px[u] += static_cast<double>(c[u][v]) / static_cast<double>(total);
      py[v] += static_cast<double>(c[u][v]) / static_cast<double>(total);
    }
  }
  double mi = 0.0;
  for (size_t u = 0; u < B; ++u) {
    for (size_t v = 0; v < B; ++v) {
      if (c[u][v] == 0) continue;
      const double p = static_cast<double>(c[u][v]) / static_cast<double>(total);
      mi += p * std::log(p / (px[u] * py[v]));
    }
  }
  return mi < 0.0 ? 0.0 : mi;
}

double oracle_mi(const std::vector<double>& x, const std::vector<double>& y, int bins) {
  return oracle_mi_from_counts(oracle_counts(x, y, bins), static_cast<long>(x.size()));
}

double oracle_entropy(const std::vector<double>& x, int bins) {
  std::vector<long> c(static_cast<size_t>(bins), 0);
  for (double v : x) c[static_cast<size_t>(oracle_bin(v, bins))]++;
  double h = 0.0;
  for (long n : c) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(x.size());
    h -= p * std::log(p);
  }
  return h;
}

VecF to_vecf(const std::vector<double>& v) {
  VecF out(static_cast<Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = static_cast<float>(v[i]);
  return out;
}

std::vector<double> uniform_vector(Rng& rng, size_t n) {
  std::vector<double> v(n);
  // round through float so the library (fed float32 traces) and the oracle
  // bin the very same values
  for (auto& e : v) e = static_cast<double>(static_cast<float>(rng.uniform01()));
  return v;
}

JointHistogram hist_of(const std::vector<double>& x, const std::vector<double>& y,
                       int bins) {
  return joint_histogram(to_vecf(x), to_vecf(y), HistogramConfig{bins});
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("joint_histogram: endpoints land in corner bins") {
  const auto h = hist_of({0.0, 1.0}, {0.0, 1.0}, 2);
  CHECK(h.counts(0, 0) == 1);
  CHECK(h.counts(1, 1) == 1);
  CHECK(h.counts(0, 1) == 0);
  CHECK(h.counts(1, 0) == 0);
  CHECK(h.total == 2);
}

TEST_CASE("joint_histogram: straddling the midpoint") {
  const auto h = hist_of({0.49, 0.51}, {0.51, 0.49}, 2);
  CHECK(h.counts(0, 1) == 1);
  CHECK(h.counts(1, 0) == 1);
  CHECK(h.counts(0, 0) == 0);
  CHECK(h.counts(1, 1) == 0);
}

TEST_CASE("joint_histogram: matches brute-force binning on seeded uniforms") {
  Rng rng(404);
  const auto x = uniform_vector(rng, 100);
  const auto y = uniform_vector(rng, 100);
  const auto h = hist_of(x, y, 4);
  const auto want = oracle_counts(x, y, 4);
  long total = 0;
  for (Index u = 0; u < 4; ++u) {
    for (Index v = 0; v < 4; ++v) {
      CHECK(h.counts(u, v) == want[static_cast<size_t>(u)][static_cast<size_t>(v)]);
      total += h.counts(u, v);
    }
  }
  CHECK(total == 100);
}

TEST_CASE("joint_histogram: rejects out-of-range and mismatched input") {
  CHECK_THROWS_AS(hist_of({0.0, 1.2}, {0.0, 0.5}, 2), RangeError);
  CHECK_THROWS_AS(hist_of({-0.2, 0.5}, {0.0, 0.5}, 2), RangeError);
  VecF a = to_vecf({0.1, 0.2});
  VecF b = to_vecf({0.1, 0.2, 0.3});
  CHECK_THROWS_AS(joint_histogram(a, b, HistogramConfig{2}), ShapeError);
  // within tolerance: accepted and clamped
  const auto h = hist_of({1.0 + 5e-10, 0.5}, {0.0, 0.5}, 2);
  CHECK(h.total == 2);
}

TEST_CASE("mutual_information: hand values") {
  SUBCASE("perfect diagonal of 2 samples gives ln 2") {
    const auto h = hist_of({0.0, 1.0}, {0.0, 1.0}, 2);
    CHECK(mutual_information(h) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("independent uniform counts give 0") {
    JointHistogram h;
    h.counts = Mat<int64_t>::Ones(2, 2);
    h.total = 4;
    CHECK(mutual_information(h) == 0.0);
  }
  SUBCASE("constant x (single nonzero row) gives 0") {
    JointHistogram h;
    h.counts = Mat<int64_t>::Zero(2, 2);
    h.counts(0, 0) = 3;
    h.counts(0, 1) = 5;
    h.total = 8;
    CHECK(mutual_information(h) == 0.0);
  }
}

TEST_CASE("mutual_information: matches double-loop oracle on random 4x4 counts") {
  Rng rng(909);
  for (int trial = 0; trial < 50; ++trial) {
    JointHistogram h;
    h.counts = Mat<int64_t>::Zero(4, 4);
    h.total = 0;
    std::vector<std::vector<long>> c(4, std::vector<long>(4, 0));
    for (int u = 0; u < 4; ++u) {
      for (int v = 0; v < 4; ++v) {
        const long n = static_cast<long>(rng.below(6));
        h.counts(u, v) = n;
        c[static_cast<size_t>(u)][static_cast<size_t>(v)] = n;
        h.total += n;
      }
    }
    if (h.total == 0) continue;
    CHECK(std::abs(mutual_information(h) - oracle_mi_from_counts(c, h.total)) <= 1e-12);
  }
}

TEST_CASE("mutual_information: transpose symmetry") {
  Rng rng(515);
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = uniform_vector(rng, 64);
    const auto y = uniform_vector(rng, 64);
    const auto h = hist_of(x, y, 3);
    JointHistogram ht;
    ht.counts = h.counts.transpose();
    ht.total = h.total;
    CHECK(std::abs(mutual_information(h) - mutual_information(ht)) <= 1e-12);
  }
}

TEST_CASE("mutual_information: self-MI equals binned entropy") {
  Rng rng(616);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = uniform_vector(rng, 80);
    const auto h = hist_of(x, x, 8);
    CHECK(std::abs(mutual_information(h) - oracle_entropy(x, 8)) <= 1e-12);
  }
}

TEST_CASE("mutual_information: independence bias stays under 0.2 nats at S=5000, B=32") {
  Rng rng(717);
  const auto x = uniform_vector(rng, 5000);
  const auto y = uniform_vector(rng, 5000);
  const double mi = mutual_information(hist_of(x, y, 32));
  CHECK(mi >= 0.0);
  CHECK(mi <= 0.2);  // plug-in bias ~ (B-1)^2 / (2S) ~ 0.096
}

TEST_CASE("layer_mi: identity net keeps diagonal dominance") {
  Networkf net;
  net.input_dim = 2;
  LinearLayer<float> layer;
  layer.weights = MatF::Identity(2, 2);
  layer.bias = VecF::Zero(2);
  layer.activation = Activation::Identity;
  net.layers.push_back(layer);

  ProbeConfig pcfg;
  pcfg.num_samples = 256;
  pcfg.seed = 42;
  const ActivationTrace trace = record_trace(net, pcfg);
  const MIMatrix mi = layer_mi(trace, 1, HistogramConfig{8});
  CHECK(mi.values(0, 0) > mi.values(0, 1));
  CHECK(mi.values(0, 0) > mi.values(1, 0));
  CHECK(mi.values(1, 1) > mi.values(0, 1));
  CHECK(mi.values(1, 1) > mi.values(1, 0));
  // matched pairs reproduce the input column's self-MI
  const auto& x0 = trace.layers[0].values;
  for (Index c = 0; c < 2; ++c) {
    const double self_mi =
        mutual_information(joint_histogram(x0.col(c), x0.col(c), HistogramConfig{8}));
    CHECK(std::abs(mi.values(c, c) - self_mi) <= 1e-9);
  }
}

TEST_CASE("layer_mi: dead output neuron zeroes its column") {
  Networkf net;
  net.input_dim = 2;
  LinearLayer<float> layer;
  layer.weights.resize(2, 2);
  layer.weights << 1.0f, 1.0f,
                   0.0f, 0.0f;
  layer.bias = VecF::Zero(2);
  layer.activation = Activation::ReLU;
  net.layers.push_back(layer);

  ProbeConfig pcfg;
  pcfg.num_samples = 128;
  pcfg.seed = 9;
  const ActivationTrace trace = record_trace(net, pcfg);
  const MIMatrix mi = layer_mi(trace, 1, HistogramConfig{4});
  CHECK(mi.values(0, 1) == 0.0);
  CHECK(mi.values(1, 1) == 0.0);
  CHECK(mi.values(0, 0) > 0.0);
}

TEST_CASE("layer_mi: equals per-pair brute force on hand-built trace") {
  // hand trace: x_0 with N=3, x_1 with M=2, S=10
  Rng rng(33);
  ActivationTrace trace;
  trace.num_samples = 10;
  TraceLayer l0, l1;
  l0.values.resize(10, 3);
  l1.values.resize(10, 2);
  for (Index r = 0; r < 10; ++r) {
    for (Index c = 0; c < 3; ++c) l0.values(r, c) = static_cast<float>(rng.uniform01());
    for (Index c = 0; c < 2; ++c) l1.values(r, c) = static_cast<float>(rng.uniform01());
  }
  l0.lo = VecF::Zero(3);
  l0.hi = VecF::Ones(3);
  l1.lo = VecF::Zero(2);
  l1.hi = VecF::Ones(2);
  l0.constant = {0, 0, 0};
  l1.constant = {0, 0};
  trace.layers = {l0, l1};

  const HistogramConfig cfg{3};
  const MIMatrix mi = layer_mi(trace, 1, cfg);
  REQUIRE(mi.values.rows() == 3);
  REQUIRE(mi.values.cols() == 2);
  for (Index n = 0; n < 3; ++n) {
    for (Index m = 0; m < 2; ++m) {
      std::vector<double> x(10), y(10);
      for (Index s = 0; s < 10; ++s) {
        x[static_cast<size_t>(s)] = l0.values(s, n);
        y[static_cast<size_t>(s)] = l1.values(s, m);
      }
      CHECK(std::abs(mi.values(n, m) - oracle_mi(x, y, 3)) <= 1e-12);
      // order independence: the standalone pair path gives the same bits
      const double pair_mi = mutual_information(
          joint_histogram(l0.values.col(n), l1.values.col(m), cfg));
      CHECK(mi.values(n, m) == pair_mi);
    }
  }
}

TEST_CASE("layer_mi: index out of range") {
  Networkf net;
  net.input_dim = 2;
  LinearLayer<float> layer;
  layer.weights = MatF::Identity(2, 2);
  layer.bias = VecF::Zero(2);
  layer.activation = Activation::Identity;
  net.layers.push_back(layer);
  ProbeConfig pcfg;
  pcfg.num_samples = 16;
  const ActivationTrace trace = record_trace(net, pcfg);
  CHECK_THROWS_AS(layer_mi(trace, 0, HistogramConfig{4}), InvalidInput);
  CHECK_THROWS_AS(layer_mi(trace, 2, HistogramConfig{4}), InvalidInput);
}

TEST_CASE("all_layer_mi: shapes, determinism, and cache round trip") {
  Rng rng(808);
  Networkf net;
  net.input_dim = 3;
  for (Index dims : {4, 2}) {
    LinearLayer<float> layer;
    const Index in = net.layers.empty() ? 3 : net.layers.back().out_dim();
    layer.weights.resize(dims, in);
    layer.bias.resize(dims);
    for (Index r = 0; r < dims; ++r) {
      layer.bias[r] = 0.0f;
      for (Index c = 0; c < in; ++c) {
        layer.weights(r, c) = static_cast<float>(rng.uniform(-1.0, 1.0));
      }
    }
    layer.activation = net.layers.empty() ? Activation::ReLU : Activation::Identity;
    net.layers.push_back(layer);
  }
  ProbeConfig pcfg;
  pcfg.num_samples = 100;
  pcfg.seed = 5;
  const ActivationTrace trace = record_trace(net, pcfg);
  const HistogramConfig cfg{5};
  const auto mi = all_layer_mi(trace, cfg);
  REQUIRE(mi.size() == 2);
  CHECK(mi[0].values.rows() == 3);
  CHECK(mi[0].values.cols() == 4);
  CHECK(mi[1].values.rows() == 4);
  CHECK(mi[1].values.cols() == 2);
  CHECK(mi[0].layer_index == 1);
  CHECK(mi[1].layer_index == 2);

  const auto mi2 = all_layer_mi(trace, cfg);
  for (size_t l = 0; l < mi.size(); ++l) {
    CHECK((mi[l].values.array() == mi2[l].values.array()).all());
    CHECK(std::abs(mi[l].values.minCoeff()) >= 0.0);  // nonnegative after clamp
  }

  const auto path = temp_file("miprune_mi_cache.bin");
  save_mi(mi, cfg.bins, pcfg.num_samples, path);
  const MICache loaded = load_mi(path);
  CHECK(loaded.bins == cfg.bins);
  CHECK(loaded.num_samples == pcfg.num_samples);
  REQUIRE(loaded.layers.size() == mi.size());
  for (size_t l = 0; l < mi.size(); ++l) {
    CHECK((loaded.layers[l].values.array() == mi[l].values.array()).all());
    CHECK(loaded.layers[l].layer_index == mi[l].layer_index);
  }
  std::filesystem::remove(path);
}

TEST_CASE("mi cache io: format errors") {
  const auto path = temp_file("miprune_mi_bad.bin");
  std::ofstream os(path, std::ios::binary);
  os << "WRNG and some payload";
  os.close();
  CHECK_THROWS_WITH_AS(load_mi(path), doctest::Contains("magic"), FormatError);
  std::filesystem::remove(path);
}
