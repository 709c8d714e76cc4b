#pragma once

#include <optional>
#include <vector>

#include "miprune/types.hpp"

namespace miprune {

// Ranks 1..n with ties assigned the average rank of their run.
std::vector<double> average_ranks(const VecD& v);

// Empty when either side has zero variance.
std::optional<double> pearson(const VecD& a, const VecD& b);

// Spearman rank correlation (Pearson over average ranks).
std::optional<double> spearman(const VecD& a, const VecD& b);

// Kendall tau-b (tie-corrected), O(n^2) pair count.
std::optional<double> kendall_tau(const VecD& a, const VecD& b);

}  // namespace miprune
