#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "miprune/mi.hpp"
#include "miprune/network.hpp"
#include "miprune/probe.hpp"

namespace miprune {

enum class Method { MI, Magnitude, Random, Correlation, WeightSimilarity };

std::string method_name(Method m);
Method parse_method(const std::string& name);

// Which weights feed a magnitude score.
enum class MagnitudeMode { Incoming, Outgoing, Both };

// Per-layer score vectors; entry k holds scores for paper layer k+1.
// Higher score = keep.
using LayerScores = std::vector<VecD>;

// Linear depth-wise schedule: rate for hidden layer h (1-based) is
// max_rate * h / num_hidden.
std::vector<double> schedule(double max_rate, int num_hidden);

// floor(rate * width) with a 1e-9 absorber so rates that are integers up to
// FP noise round to the intended count; the realized rate never exceeds the
// requested one.
Index removal_count(double rate, Index width);

// --- scorers ---------------------------------------------------------------
// score_* return hidden-layer scores (layers 1..L-1), the range pruning may
// touch. mi_scores / magnitude_scores cover all layers 1..L for reporting.

// Sum of per-connection MI over kept incoming links; `keep[i]` masks x_i's
// neurons and must be sized accordingly for i in [0, L-1].
LayerScores mi_scores(const std::vector<MIMatrix>& mi,
                      const std::vector<std::vector<uint8_t>>& keep);
LayerScores magnitude_scores(const Networkf& net,
                             MagnitudeMode mode = MagnitudeMode::Incoming);

LayerScores score_mi(const std::vector<MIMatrix>& mi,
                     const std::vector<std::vector<uint8_t>>& keep);
LayerScores score_magnitude(const Networkf& net,
                            MagnitudeMode mode = MagnitudeMode::Incoming);
LayerScores score_random(const Networkf& net, uint64_t seed);

// 1 - max |pearson| against any other live neuron in the same layer, over
// the probe trace; duplicated neurons score 0, constant neurons score 0.
LayerScores score_correlation(const ActivationTrace& trace);

// Weight-similarity saliency: min over partners m' of
// ||outgoing(m')||^2 * ||incoming(m) - incoming(m')||^2, bias appended to
// the incoming rows. Single-shot scoring.
LayerScores score_weight_similarity(const Networkf& net);

// --- plans and surgery -------------------------------------------------------

struct PrunePlan {
  std::vector<double> rates;                 // per hidden layer
  std::vector<std::vector<Index>> removals;  // sorted neuron indices per hidden layer

  bool empty() const;
};

// Remove the floor(rate * width) lowest-scored neurons per hidden layer;
// ties break toward the lower index. Refuses to empty a layer.
PrunePlan make_plan(const LayerScores& hidden_scores, const std::vector<double>& rates);

// Structural surgery: drops each removed neuron's incoming row and bias entry
// and the next layer's matching columns. Returns a new, smaller dense net.
Networkf apply_plan(const Networkf& net, const PrunePlan& plan);

struct PruneResult {
  Networkf network;
  PrunePlan plan;
  LayerScores scores;  // hidden-layer scores the plan was built from
};

// End-to-end: schedule -> scorer -> plan -> surgery. MI scoring walks
// shallow-to-deep, zeroing rows of neurons removed in the previous layer
// before summing. `trace` is required for Correlation, `mi` for MI.
PruneResult prune(const Networkf& net, Method method, double max_rate,
                  const ActivationTrace* trace, const std::vector<MIMatrix>* mi,
                  uint64_t seed);

// Text plan: "layer <h> remove <idx,idx,...> rate <r>" per hidden layer
// ("-" when nothing is removed).
void write_plan(const PrunePlan& plan, std::ostream& os);

// Score dump: "method,layer,neuron,score".
void write_scores_csv(Method method, const LayerScores& scores, std::ostream& os);

}  // namespace miprune
