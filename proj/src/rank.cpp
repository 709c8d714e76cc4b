#include "miprune/rank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "miprune/errors.hpp"

namespace miprune {

std::vector<double> average_ranks(const VecD& v) {
  const Index n = v.size();
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return v[a] < v[b]; });
  std::vector<double> ranks(static_cast<size_t>(n));
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (Index k = i; k <= j; ++k) ranks[static_cast<size_t>(order[k])] = avg;
    i = j + 1;
  }
  return ranks;
}

namespace {
std::optional<double> pearson_raw(const double* a, const double* b, Index n) {
  double mean_a = 0.0, mean_b = 0.0;
  for (Index i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

void check_pair(const VecD& a, const VecD& b) {
  if (a.size() != b.size()) {
    throw ShapeError("rank metric inputs differ in length: " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
  if (a.size() < 2) throw InvalidInput("rank metrics need at least 2 values");
}
}  // namespace

std::optional<double> pearson(const VecD& a, const VecD& b) {
  check_pair(a, b);
  return pearson_raw(a.data(), b.data(), a.size());
}

std::optional<double> spearman(const VecD& a, const VecD& b) {
  check_pair(a, b);
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson_raw(ra.data(), rb.data(), a.size());
}

std::optional<double> kendall_tau(const VecD& a, const VecD& b) {
  check_pair(a, b);
  const Index n = a.size();
  int64_t concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0) ++ties_a;
      if (db == 0.0) ++ties_b;
      if (da == 0.0 || db == 0.0) continue;
      if ((da > 0.0) == (db > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const int64_t n0 = n * (n - 1) / 2;
  const double denom = std::sqrt(static_cast<double>(n0 - ties_a) *
                                 static_cast<double>(n0 - ties_b));
  if (denom == 0.0) return std::nullopt;
  return static_cast<double>(concordant - discordant) / denom;
}

}  // namespace miprune
