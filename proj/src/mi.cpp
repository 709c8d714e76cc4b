#include "miprune/mi.hpp"

#include "miprune/io_util.hpp"

namespace miprune {

namespace {
constexpr std::array<char, 4> kMagic = {'M', 'I', 'P', 'M'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxDim = 1u << 24;

double mi_from_counts(const Mat<int64_t>& counts, int64_t total) {
  const Index B = counts.rows();
  Vec<int64_t> row_sum = counts.rowwise().sum();
  Vec<int64_t> col_sum = counts.colwise().sum().transpose();
  const double inv_total = 1.0 / static_cast<double>(total);
  double mi = 0.0;
  for (Index u = 0; u < B; ++u) {
    if (row_sum[u] == 0) continue;
    const double pu = static_cast<double>(row_sum[u]) * inv_total;
    for (Index v = 0; v < B; ++v) {
      const int64_t c = counts(u, v);
      if (c == 0) continue;  // 0 * log 0 = 0
      const double puv = static_cast<double>(c) * inv_total;
      const double pv = static_cast<double>(col_sum[v]) * inv_total;
      mi += puv * std::log(puv / (pu * pv));
    }
  }
  return mi < 0.0 ? 0.0 : mi;
}
}  // namespace

double mutual_information(const JointHistogram& h) {
  if (h.total <= 0 || h.counts.rows() != h.counts.cols() || h.counts.rows() < 2) {
    throw InvalidInput("invalid joint histogram");
  }
  if (h.counts.sum() != h.total) {
    throw InvalidInput("joint histogram counts do not sum to total");
  }
  return mi_from_counts(h.counts, h.total);
}

MIMatrix layer_mi(const ActivationTrace& trace, int layer_index,
                  const HistogramConfig& cfg) {
  if (cfg.bins < 2) throw InvalidInput("histogram needs at least 2 bins");
  if (layer_index < 1 || layer_index > trace.depth()) {
    throw InvalidInput("layer index " + std::to_string(layer_index) +
                       " out of range [1, " + std::to_string(trace.depth()) + "]");
  }
  const TraceLayer& in = trace.layers[static_cast<size_t>(layer_index - 1)];
  const TraceLayer& out = trace.layers[static_cast<size_t>(layer_index)];
  const Index N = in.dim();
  const Index M = out.dim();
  const Index S = in.values.rows();
  const int B = cfg.bins;

  // Bin each column once; the pair loop then only counts.
  auto bin_columns = [&](const MatF& v, const char* axis) {
    Mat<uint16_t> bins(v.rows(), v.cols());
    for (Index c = 0; c < v.cols(); ++c) {
      for (Index r = 0; r < v.rows(); ++r) {
        bins(r, c) = static_cast<uint16_t>(
            bin_index(static_cast<double>(v(r, c)), B, axis));
      }
    }
    return bins;
  };
  const Mat<uint16_t> bx = bin_columns(in.values, "x");
  const Mat<uint16_t> by = bin_columns(out.values, "y");

  MIMatrix result;
  result.layer_index = layer_index;
  result.values = MatD::Zero(N, M);
  Mat<int64_t> counts(B, B);
  for (Index n = 0; n < N; ++n) {
    if (in.constant[static_cast<size_t>(n)]) continue;  // dead column: MI = 0
    for (Index m = 0; m < M; ++m) {
      if (out.constant[static_cast<size_t>(m)]) continue;
      counts.setZero();
      for (Index s = 0; s < S; ++s) {
        ++counts(bx(s, n), by(s, m));
      }
      result.values(n, m) = mi_from_counts(counts, S);
    }
  }
  return result;
}

std::vector<MIMatrix> all_layer_mi(const ActivationTrace& trace,
                                   const HistogramConfig& cfg) {
  std::vector<MIMatrix> mi;
  mi.reserve(static_cast<size_t>(trace.depth()));
  for (int i = 1; i <= trace.depth(); ++i) {
    mi.push_back(layer_mi(trace, i, cfg));
  }
  return mi;
}

void save_mi(const std::vector<MIMatrix>& mi, int bins, int num_samples,
             const std::filesystem::path& path) {
  if (mi.empty()) throw InvalidInput("no MI matrices to save");
  auto os = open_output(path);
  write_magic(os, kMagic);
  write_u32(os, kVersion);
  write_u32(os, static_cast<uint32_t>(mi.size()));
  write_u32(os, static_cast<uint32_t>(bins));
  write_u32(os, static_cast<uint32_t>(num_samples));
  for (const auto& m : mi) {
    write_u32(os, static_cast<uint32_t>(m.values.rows()));
    write_u32(os, static_cast<uint32_t>(m.values.cols()));
    for (Index r = 0; r < m.values.rows(); ++r) {
      for (Index c = 0; c < m.values.cols(); ++c) {
        write_f64(os, m.values(r, c));
      }
    }
  }
  if (!os) throw FormatError("failed writing MI cache to " + path.string());
}

MICache load_mi(const std::filesystem::path& path) {
  auto is = open_input(path);
  const std::string what = "MI cache " + path.string();
  expect_magic(is, kMagic, what);
  const uint32_t version = read_u32(is, what + " version");
  if (version != kVersion) {
    throw FormatError("unsupported MI cache version " + std::to_string(version) +
                      " in " + path.string());
  }
  const uint32_t depth = read_u32(is, what + " layer count");
  const uint32_t bins = read_u32(is, what + " bin count");
  const uint32_t samples = read_u32(is, what + " sample count");
  if (depth < 1 || bins < 2 || depth > kMaxDim) {
    throw FormatError("inconsistent dimensions in " + path.string());
  }
  MICache cache;
  cache.bins = static_cast<int>(bins);
  cache.num_samples = static_cast<int>(samples);
  for (uint32_t l = 0; l < depth; ++l) {
    const uint32_t n = read_u32(is, what + " rows");
    const uint32_t m = read_u32(is, what + " cols");
    if (n < 1 || m < 1 || n > kMaxDim || m > kMaxDim) {
      throw FormatError("inconsistent dimensions in " + path.string());
    }
    MIMatrix mat;
    mat.layer_index = static_cast<int>(l) + 1;
    mat.values.resize(n, m);
    for (Index r = 0; r < mat.values.rows(); ++r) {
      for (Index c = 0; c < mat.values.cols(); ++c) {
        mat.values(r, c) = read_f64(is, what + " values");
      }
    }
    cache.layers.push_back(std::move(mat));
  }
  return cache;
}

}  // namespace miprune
